#pragma once

// Independent oracles shared by the unit tests. Deliberately naive.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "qubof/qubo.hpp"
#include "qubof/sign_matrix.hpp"

namespace qubof::testing {

inline QuboMatrix paper_example() {
  return QuboMatrix::from_rows({{6, 0, 5, -9}, {0, 0, -3, 2}, {5, -3, -18, 2}, {-9, 2, 2, -2}});
}

inline double naive_objective(const QuboMatrix& q, const BinaryVector& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.order(); ++i)
    for (std::size_t j = 0; j < q.order(); ++j)
      if (x[i] && x[j]) s += q(i, j);
  return s;
}

/// Brute-force minimum with smallest-code tie-break, full O(n^2) evaluation.
inline std::pair<std::uint64_t, double> brute_minimum(const QuboMatrix& q) {
  const std::size_t n = q.order();
  std::uint64_t best_code = 0;
  double best = 0.0;
  for (std::uint64_t code = 0; code < (std::uint64_t{1} << n); ++code) {
    BinaryVector x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = (code >> i) & 1U;
    const double v = naive_objective(q, x);
    if (code == 0 || v < best) {
      best = v;
      best_code = code;
    }
  }
  return {best_code, best};
}

inline std::uint64_t brute_automorphisms(const SignMatrix& s) {
  std::vector<std::size_t> p(s.n);
  std::iota(p.begin(), p.end(), 0);
  std::uint64_t count = 0;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < s.n && ok; ++i)
      for (std::size_t j = 0; j < s.n && ok; ++j) ok = s.signs[p[i] * s.n + p[j]] == s.signs[i * s.n + j];
    if (ok) ++count;
  } while (std::next_permutation(p.begin(), p.end()));
  return count;
}

inline std::uint64_t factorial(std::uint64_t n) { return n <= 1 ? 1 : n * factorial(n - 1); }

}  // namespace qubof::testing
