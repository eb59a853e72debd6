#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "qubof/permutation.hpp"
#include "qubof/qubo.hpp"

namespace qubof {

/// Elementwise sign of a square matrix, entries in {-1, 0, +1}.
struct SignMatrix {
  std::size_t n = 0;
  std::vector<std::int8_t> signs;

  std::int8_t operator()(std::size_t i, std::size_t j) const noexcept { return signs[i * n + j]; }
  friend bool operator==(const SignMatrix&, const SignMatrix&) = default;
};

SignMatrix sign_matrix(const QuboMatrix& q);

/// out(i, j) = s(p(i), p(j)).
SignMatrix permute_signs(const SignMatrix& s, const Permutation& p);

}  // namespace qubof
