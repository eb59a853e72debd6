#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "json.hpp"

namespace qubof {

using BinaryVector = std::vector<std::uint8_t>;

/// Dense square model matrix defining the objective x^T Q x. Immutable once
/// built; entries are stored row-major and must all be finite. Symmetry is
/// detected at construction and never assumed by any algorithm.
class QuboMatrix {
 public:
  QuboMatrix() = default;
  QuboMatrix(std::size_t n, std::vector<double> entries);

  static QuboMatrix from_rows(const std::vector<std::vector<double>>& rows);
  static QuboMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static QuboMatrix zeros(std::size_t n);

  std::size_t order() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return entries_[i * n_ + j];
  }
  std::span<const double> row(std::size_t i) const noexcept {
    return {entries_.data() + i * n_, n_};
  }
  std::span<const double> entries() const noexcept { return entries_; }
  bool symmetric_hint() const noexcept { return symmetric_; }
  double max_abs() const noexcept;

  friend bool operator==(const QuboMatrix&, const QuboMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
  bool symmetric_ = true;
};

struct SolutionVector {
  BinaryVector bits;
  double value = 0.0;

  friend bool operator==(const SolutionVector&, const SolutionVector&) = default;
};

struct MatrixGenSpec {
  std::size_t n = 1;
  double mean = 0.0;
  double stddev = 4.0;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultExactLimit = 22;
// Hard ceiling: the enumeration index is a 64-bit code.
inline constexpr std::size_t kMaxExactOrder = 40;

/// Sum over i, j of x[i] Q[i][j] x[j].
double objective(const QuboMatrix& q, std::span<const std::uint8_t> x);

/// Exhaustive minimizer. Ties resolve to the smallest integer encoding of the
/// bit vector, with bit 0 least significant. Refuses n > limit.
SolutionVector solve_exact(const QuboMatrix& q, std::size_t limit = kDefaultExactLimit);

struct AnnealSchedule {
  std::uint64_t sweeps_per_restart = 100;
  // Start and end temperatures as fractions of the largest possible
  // single-flip change in objective.
  double hot_fraction = 0.5;
  double cold_fraction = 1e-3;
};

/// Simulated annealing with random restarts. `budget` counts sweeps (one
/// sweep is n single-bit flip proposals); the number of restarts is
/// budget / schedule.sweeps_per_restart, at least one. Each restart ends
/// with a greedy descent to a local minimum.
SolutionVector solve_heuristic(const QuboMatrix& q, std::uint64_t budget, std::uint64_t seed,
                               const AnnealSchedule& schedule = {});

/// I.i.d. Normal(mean, stddev) entries drawn row-major from Rng(spec.seed).
QuboMatrix generate_matrix(const MatrixGenSpec& spec);

/// Bit vector for an enumeration code (bit i of code -> x[i]).
BinaryVector bits_from_code(std::uint64_t code, std::size_t n);

// {"n": int, "entries": [[...], ...]}
nlohmann::ordered_json matrix_to_json(const QuboMatrix& q);
QuboMatrix matrix_from_json(const nlohmann::json& j);

nlohmann::ordered_json solution_to_json(const SolutionVector& s);
BinaryVector bits_from_json(const nlohmann::json& j);

}  // namespace qubof
