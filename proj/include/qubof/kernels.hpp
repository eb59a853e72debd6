#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version in
// qubof::kernels and a plain serial version in qubof::kernels::serial that
// is kept as the reference for tests and for the benchmark. Both versions
// return identical results for the same inputs; the parallel ones assemble
// their output in index order and never depend on the thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "qubof/qubo.hpp"

namespace qubof::kernels {

struct SearchResult {
  std::uint64_t code = 0;  // bit i of code is x[i]
  double value = 0.0;
};

/// Orders candidates by value, then by code.
constexpr bool better(const SearchResult& a, const SearchResult& b) noexcept {
  return a.value < b.value || (a.value == b.value && a.code < b.code);
}

/// Gray-code enumeration of all 2^n assignments with O(n) incremental
/// updates. The parallel version fixes the top bits of each block.
SearchResult exhaustive_search(const QuboMatrix& q);

/// Objective of every candidate, output[i] for candidates[i].
std::vector<double> evaluate_all(const QuboMatrix& q, std::span<const BinaryVector> candidates);

/// Index of the first minimum.
std::size_t argmin_first(std::span<const double> values);

/// t independent Bernoulli vectors. Candidate l draws from
/// Rng(derive_seed(seed, l)), coordinate by coordinate.
std::vector<BinaryVector> sample_bernoulli(std::span<const double> probs, std::size_t t,
                                           std::uint64_t seed);

namespace serial {

SearchResult exhaustive_search(const QuboMatrix& q);
std::vector<double> evaluate_all(const QuboMatrix& q, std::span<const BinaryVector> candidates);
std::vector<BinaryVector> sample_bernoulli(std::span<const double> probs, std::size_t t,
                                           std::uint64_t seed);

}  // namespace serial

/// Top bits fixed per parallel block for a given order.
std::size_t exhaustive_block_bits(std::size_t n) noexcept;

}  // namespace qubof::kernels
