#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"
#include "qubof/obfuscation.hpp"
#include "qubof/qubo.hpp"
#include "qubof/sign_matrix.hpp"

namespace qubof {

inline constexpr std::size_t kDefaultAutomorphismCap = 16;
// 20! is the largest factorial that fits in 64 bits.
inline constexpr std::size_t kMaxAutomorphismOrder = 20;

/// Number of permutations p with s(p(i), p(j)) == s(i, j) for all i, j.
/// Exact. Uses orbit-stabilizer over a base of individualized points; each
/// orbit membership test is a backtracking search pruned by colour
/// refinement on row and column sign profiles. Throws SizeLimitError when
/// s.n > cap.
std::uint64_t count_automorphisms(const SignMatrix& s, std::size_t cap = kDefaultAutomorphismCap);

/// ln of 1 / (alpha^(k-1) k! n!).
double recovery_probability(std::uint64_t alpha, std::size_t k, std::size_t n);

struct UniformityStat {
  int position = 0;
  std::size_t samples = 0;
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
  bool uniform = true;  // p_value >= threshold
};

inline constexpr double kUniformityThreshold = 0.01;

/// Chi-square goodness of fit of |digit| against uniform {0, .., r-1}, one
/// statistic per digit position (matrices sharing a position are pooled),
/// ordered by position.
std::vector<UniformityStat> digit_uniformity(std::span<const DigitMatrix> digits,
                                             double threshold = kUniformityThreshold);

struct PrivacyReport {
  std::uint64_t alpha = 1;
  bool alpha_exact = true;  // false: n above the cap, alpha is the lower bound 1
  std::size_t k = 1;
  std::size_t n = 1;
  double log_recovery_probability = 0.0;
  std::vector<UniformityStat> digit_uniformity;
};

PrivacyReport privacy_report(const QuboMatrix& q, const ObfuscationParams& params,
                             std::size_t automorphism_cap = kDefaultAutomorphismCap);

nlohmann::ordered_json privacy_report_to_json(const PrivacyReport& r);

struct AttackOutcome {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double frequency() const noexcept {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
  }
};

/// Simulates an honest-but-curious solver guessing its way back to the digit
/// matrices. Per trial q is obfuscated afresh (no decoys); the guesser draws
/// a slot order uniformly, a permutation for the first guessed slot
/// uniformly from all n!, and for every further slot a permutation uniformly
/// among those that make its sign matrix agree with the first one. Success
/// means every recovered matrix equals the true digit matrix at its
/// position. Small orders only (n <= 8).
AttackOutcome simulate_guessing_attack(const QuboMatrix& q, const ObfuscationParams& params,
                                       std::uint64_t trials, std::uint64_t seed);

}  // namespace qubof
