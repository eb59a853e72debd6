#pragma once

// Splits a model matrix into signed base-r digit matrices, hides each under
// its own simultaneous row/column permutation and ships them, mixed with
// optional decoys, in a random slot order.
//
// Random draw order inside obfuscate(), all from Rng(params.seed):
//   1. sigma_1 .. sigma_k, one Fisher-Yates shuffle each
//   2. one 64-bit seed per decoy, decoy d built by make_decoy from it
//   3. the slot order over all k + decoys transmitted matrices

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "qubof/permutation.hpp"
#include "qubof/qubo.hpp"
#include "qubof/sign_matrix.hpp"

namespace qubof {

enum class DecoyMode {
  // Randomly relabeled copy of the model's sign matrix with uniform
  // magnitudes in {0, .., r-1}.
  kSignPattern,
  // Every entry uniform over {-(r-1), .., r-1}.
  kUniform,
};

std::string to_string(DecoyMode mode);
DecoyMode decoy_mode_from_string(const std::string& s);

struct ObfuscationParams {
  int radix = 4;
  int digits = 5;  // k
  std::size_t decoys = 0;
  double epsilon = 1e-9;
  std::uint64_t seed = 0;
  DecoyMode decoy_mode = DecoyMode::kSignPattern;

  /// r >= 2, k >= 1, 0 < epsilon < 1 and r^k representable in 64 bits.
  void validate() const;
};

struct IntMatrix {
  std::size_t n = 0;
  std::vector<std::int32_t> entries;

  std::int32_t operator()(std::size_t i, std::size_t j) const noexcept { return entries[i * n + j]; }
  QuboMatrix to_qubo() const;
  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;
};

/// Digit position m in 1..k; decoys carry position 0.
struct DigitMatrix {
  IntMatrix digits;
  int radix = 2;
  int position = 0;

  friend bool operator==(const DigitMatrix&, const DigitMatrix&) = default;
};

/// What actually goes to the solver: no scale, permutation or slot
/// provenance.
struct TransmitSet {
  int radix = 2;
  std::vector<IntMatrix> matrices;
};

struct ObfuscationSecret {
  std::size_t n = 0;
  double scale = 1.0;                // (1 + epsilon) * max|Q|
  std::vector<Permutation> sigmas;   // sigma_m for digit m = index + 1
  Permutation send_order;            // slot s carries source send_order(s)
  std::vector<std::size_t> decoy_slots;  // ascending, 0-based
  ObfuscationParams params;

  std::size_t slot_count() const noexcept { return send_order.size(); }
  /// Slot holding digit matrix m (1-based).
  std::size_t slot_of_digit(int m) const;
  bool is_decoy_slot(std::size_t slot) const;
  /// Checks the internal invariants; throws ContractViolation.
  void validate() const;
};

struct NormalizedMatrix {
  QuboMatrix matrix;
  double scale = 1.0;
};

/// Q* = Q / ((1 + epsilon) max|Q|); every |Q*| < 1.
NormalizedMatrix normalize(const QuboMatrix& q, double epsilon);

/// Signed truncated base-r fractional digits 1..count of v, |v| < 1.
/// Computed exactly as the base-r expansion of floor(|v| r^count).
std::vector<int> fractional_digits(double v, int radix, int count);

std::vector<DigitMatrix> digit_split(const QuboMatrix& qstar, int radix, int count);

/// out(i, j) = m(sigma(i), sigma(j)).
IntMatrix permute_matrix(const IntMatrix& m, const Permutation& sigma);
DigitMatrix permute_matrix(const DigitMatrix& m, const Permutation& sigma);

DigitMatrix make_decoy(std::size_t n, int radix, std::uint64_t seed);
DigitMatrix make_decoy(std::size_t n, int radix, std::uint64_t seed, const SignMatrix& pattern);

/// Test hooks that switch off individual randomization steps.
struct ObfuscateOptions {
  bool identity_permutations = false;
  bool identity_send_order = false;
};

struct Obfuscation {
  TransmitSet transmit;
  ObfuscationSecret secret;
};

Obfuscation obfuscate(const QuboMatrix& q, const ObfuscationParams& params,
                      const ObfuscateOptions& options = {});

/// Inverse of obfuscate up to digit truncation: sum_m r^-m unpermute(M^sigma_m).
QuboMatrix reconstruct_matrix(const TransmitSet& t, const ObfuscationSecret& s);

// {"radix": r, "matrices": [{"n": n, "entries": [[int]]}]}
nlohmann::ordered_json transmit_to_json(const TransmitSet& t);
TransmitSet transmit_from_json(const nlohmann::json& j);
nlohmann::ordered_json int_matrix_to_json(const IntMatrix& m);
IntMatrix int_matrix_from_json(const nlohmann::json& j);

nlohmann::ordered_json params_to_json(const ObfuscationParams& p);
ObfuscationParams params_from_json(const nlohmann::json& j);
nlohmann::ordered_json secret_to_json(const ObfuscationSecret& s);
ObfuscationSecret secret_from_json(const nlohmann::json& j);

}  // namespace qubof
