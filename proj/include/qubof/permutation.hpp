#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "qubof/rng.hpp"

namespace qubof {

/// Bijection on {0, ..., n-1}; p(i) is the image of i. Serialized 1-based.
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> image);

  static Permutation identity(std::size_t n);
  /// Fisher-Yates shuffle of the identity, consuming rng.
  static Permutation random(std::size_t n, Rng& rng);

  std::size_t size() const noexcept { return image_.size(); }
  std::size_t operator()(std::size_t i) const noexcept { return image_[i]; }
  std::span<const std::size_t> images() const noexcept { return image_; }
  Permutation inverse() const;
  bool is_identity() const noexcept;

  nlohmann::ordered_json to_json() const;
  static Permutation from_json(const nlohmann::json& j);

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> image_;
};

}  // namespace qubof
