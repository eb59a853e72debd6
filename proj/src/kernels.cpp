#include "qubof/kernels.hpp"

#include <bit>
#include <limits>

#include "qubof/error.hpp"
#include "qubof/rng.hpp"

namespace qubof::kernels {

namespace {

// Coupling form of the objective used by incremental search: with
// S = Q + Q^T (zero diagonal) and d = diag(Q), flipping bit j changes the
// objective by (1 - 2 x_j) (d_j + h_j) where h_j = sum_i S_ij x_i.
struct Couplings {
  std::size_t n;
  std::vector<double> sym;
  std::vector<double> diag;

  explicit Couplings(const QuboMatrix& q) : n(q.order()), sym(n * n, 0.0), diag(n) {
    for (std::size_t i = 0; i < n; ++i) {
      diag[i] = q(i, i);
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j) sym[i * n + j] = q(i, j) + q(j, i);
      }
    }
  }
};

// Enumerates the 2^(n - prefix_bits) assignments whose top prefix_bits bits
// equal `block`.
SearchResult search_block(const QuboMatrix& q, const Couplings& c, std::size_t prefix_bits,
                          std::uint64_t block) {
  const std::size_t n = c.n;
  const std::size_t low_bits = n - prefix_bits;
  BinaryVector x(n, 0);
  std::uint64_t code = block << low_bits;
  for (std::size_t b = 0; b < prefix_bits; ++b) {
    x[low_bits + b] = static_cast<std::uint8_t>((block >> b) & 1U);
  }

  std::vector<double> field(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j]) field[i] += c.sym[i * n + j];
    }
  }
  double value = objective(q, x);
  SearchResult best{code, value};

  const std::uint64_t steps = std::uint64_t{1} << low_bits;
  for (std::uint64_t step = 1; step < steps; ++step) {
    const auto j = static_cast<std::size_t>(std::countr_zero(step));
    const double s = x[j] ? -1.0 : 1.0;
    value += s * (c.diag[j] + field[j]);
    x[j] ^= 1U;
    code ^= std::uint64_t{1} << j;
    const double* col = &c.sym[j * n];
    for (std::size_t i = 0; i < n; ++i) field[i] += s * col[i];
    const SearchResult cand{code, value};
    if (better(cand, best)) best = cand;
  }
  return best;
}

void check_search_order(const QuboMatrix& q) {
  require(q.order() >= 1, "exhaustive search: empty matrix");
  require(q.order() <= kMaxExactOrder, "exhaustive search: order exceeds 64-bit code space");
}

}  // namespace

std::size_t exhaustive_block_bits(std::size_t n) noexcept {
  return n < 12 ? 0 : 6;
}

SearchResult exhaustive_search(const QuboMatrix& q) {
  check_search_order(q);
  const Couplings c(q);
  const std::size_t prefix_bits = exhaustive_block_bits(q.order());
  const auto blocks = static_cast<std::int64_t>(std::uint64_t{1} << prefix_bits);
  std::vector<SearchResult> per_block(static_cast<std::size_t>(blocks));

#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t b = 0; b < blocks; ++b) {
    per_block[static_cast<std::size_t>(b)] =
        search_block(q, c, prefix_bits, static_cast<std::uint64_t>(b));
  }

  SearchResult best = per_block.front();
  for (const auto& r : per_block) {
    if (better(r, best)) best = r;
  }
  return best;
}

std::vector<double> evaluate_all(const QuboMatrix& q, std::span<const BinaryVector> candidates) {
  for (const auto& x : candidates) require(x.size() == q.order(), "evaluate_all: length mismatch");
  std::vector<double> out(candidates.size());
  const auto count = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t l = 0; l < count; ++l) {
    const auto idx = static_cast<std::size_t>(l);
    out[idx] = objective(q, candidates[idx]);
  }
  return out;
}

std::size_t argmin_first(std::span<const double> values) {
  require(!values.empty(), "argmin_first: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best;
}

std::vector<BinaryVector> sample_bernoulli(std::span<const double> probs, std::size_t t,
                                           std::uint64_t seed) {
  std::vector<BinaryVector> out(t, BinaryVector(probs.size(), 0));
  const auto count = static_cast<std::int64_t>(t);
#pragma omp parallel for schedule(static)
  for (std::int64_t l = 0; l < count; ++l) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l)));
    auto& x = out[static_cast<std::size_t>(l)];
    for (std::size_t i = 0; i < probs.size(); ++i) x[i] = rng.bernoulli(probs[i]) ? 1 : 0;
  }
  return out;
}

namespace serial {

SearchResult exhaustive_search(const QuboMatrix& q) {
  check_search_order(q);
  const Couplings c(q);
  return search_block(q, c, 0, 0);
}

std::vector<double> evaluate_all(const QuboMatrix& q, std::span<const BinaryVector> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (const auto& x : candidates) {
    require(x.size() == q.order(), "evaluate_all: length mismatch");
    out.push_back(objective(q, x));
  }
  return out;
}

std::vector<BinaryVector> sample_bernoulli(std::span<const double> probs, std::size_t t,
                                           std::uint64_t seed) {
  std::vector<BinaryVector> out;
  out.reserve(t);
  for (std::size_t l = 0; l < t; ++l) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(l)));
    BinaryVector x(probs.size(), 0);
    for (std::size_t i = 0; i < probs.size(); ++i) x[i] = rng.bernoulli(probs[i]) ? 1 : 0;
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace serial

}  // namespace qubof::kernels
