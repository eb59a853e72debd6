#include "qubof/permutation.hpp"

#include <numeric>

#include "qubof/error.hpp"

namespace qubof {

Permutation::Permutation(std::vector<std::size_t> image) : image_(std::move(image)) {
  std::vector<bool> seen(image_.size(), false);
  for (std::size_t v : image_) {
    require(v < image_.size() && !seen[v], "Permutation: not a bijection");
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> image(n);
  std::iota(image.begin(), image.end(), std::size_t{0});
  Permutation p;
  p.image_ = std::move(image);
  return p;
}

Permutation Permutation::random(std::size_t n, Rng& rng) {
  Permutation p = identity(n);
  rng.shuffle(std::span<std::size_t>(p.image_));
  return p;
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(image_.size());
  for (std::size_t i = 0; i < image_.size(); ++i) inv[image_[i]] = i;
  Permutation p;
  p.image_ = std::move(inv);
  return p;
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t i = 0; i < image_.size(); ++i) {
    if (image_[i] != i) return false;
  }
  return true;
}

nlohmann::ordered_json Permutation::to_json() const {
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t v : image_) arr.push_back(v + 1);
  return arr;
}

Permutation Permutation::from_json(const nlohmann::json& j) {
  require(j.is_array(), "permutation JSON: expected an array");
  std::vector<std::size_t> image;
  image.reserve(j.size());
  for (const auto& v : j) {
    require(v.is_number_integer() && v.get<std::int64_t>() >= 1,
            "permutation JSON: entries must be 1-based indices");
    image.push_back(static_cast<std::size_t>(v.get<std::int64_t>() - 1));
  }
  return Permutation(std::move(image));
}

}  // namespace qubof
