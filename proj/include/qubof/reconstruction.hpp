#pragma once

// Client-side recovery: undo the slot shuffle and per-matrix permutations on
// the solver's answers, blend them into per-coordinate probabilities,
// sample candidates and keep the one that is best on the original matrix.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qubof/obfuscation.hpp"
#include "qubof/qubo.hpp"

namespace qubof {

struct WeightVector {
  std::vector<double> weights;

  /// All weights finite and strictly positive, at least one.
  void validate() const;
};

struct ProbabilityVector {
  std::vector<double> probs;
};

/// Drops decoy answers and returns v_1..v_k in digit order, each mapped back
/// to the unpermuted index space: v_m[i] = v^sigma_m[sigma_m^-1(i)].
std::vector<BinaryVector> unshuffle(std::span<const BinaryVector> vectors, const ObfuscationSecret& secret);

/// w[m] = r^-m, m = 1..k.
WeightVector default_weights(int radix, int digits);

ProbabilityVector weighted_average(std::span<const BinaryVector> vectors, const WeightVector& w);

/// t independent draws with Pr[X[i] = 1] = p[i].
std::vector<BinaryVector> sample_candidates(const ProbabilityVector& p, std::size_t t, std::uint64_t seed);

/// First candidate with the smallest objective on q.
SolutionVector select_best(std::span<const BinaryVector> candidates, const QuboMatrix& q);

struct RecoverOptions {
  std::size_t samples = 200;
  std::optional<WeightVector> weights;  // default_weights when empty
  std::uint64_t seed = 0;
};

/// unshuffle -> weighted_average -> sample_candidates -> select_best, with
/// the final value measured on the caller's original matrix q.
SolutionVector recover(std::span<const BinaryVector> vectors, const ObfuscationSecret& secret,
                       const QuboMatrix& q, const RecoverOptions& options);

}  // namespace qubof
