#include "qubof/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qubof/error.hpp"
#include "qubof/kernels.hpp"
#include "qubof/rng.hpp"

namespace qubof {

QuboMatrix::QuboMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), entries_(std::move(entries)) {
  require(n_ >= 1, "QuboMatrix: order must be at least 1");
  require(entries_.size() == n_ * n_, "QuboMatrix: expected n*n entries");
  for (double v : entries_) require(std::isfinite(v), "QuboMatrix: non-finite entry");
  for (std::size_t i = 0; i < n_ && symmetric_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if (entries_[i * n_ + j] != entries_[j * n_ + i]) {
        symmetric_ = false;
        break;
      }
    }
  }
}

QuboMatrix QuboMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& r : rows) {
    require(r.size() == n, "QuboMatrix: rows must form a square matrix");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return QuboMatrix(n, std::move(flat));
}

QuboMatrix QuboMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<std::vector<double>> v;
  for (const auto& r : rows) v.emplace_back(r);
  return from_rows(v);
}

QuboMatrix QuboMatrix::zeros(std::size_t n) { return QuboMatrix(n, std::vector<double>(n * n, 0.0)); }

double QuboMatrix::max_abs() const noexcept {
  double m = 0.0;
  for (double v : entries_) m = std::max(m, std::abs(v));
  return m;
}

double objective(const QuboMatrix& q, std::span<const std::uint8_t> x) {
  const std::size_t n = q.order();
  require(x.size() == n, "objective: vector length " + std::to_string(x.size()) +
                             " does not match matrix order " + std::to_string(n));
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(x[i] <= 1, "objective: vector is not binary");
    if (!x[i]) continue;
    const auto row = q.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j]) acc += row[j];
    }
    total += acc;
  }
  return total;
}

BinaryVector bits_from_code(std::uint64_t code, std::size_t n) {
  BinaryVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((code >> i) & 1U);
  return x;
}

SolutionVector solve_exact(const QuboMatrix& q, std::size_t limit) {
  if (q.order() > limit || q.order() > kMaxExactOrder) {
    throw SizeLimitError("solve_exact: order " + std::to_string(q.order()) +
                         " exceeds exhaustive limit " + std::to_string(std::min(limit, kMaxExactOrder)));
  }
  const auto found = kernels::exhaustive_search(q);
  SolutionVector out;
  out.bits = bits_from_code(found.code, q.order());
  out.value = objective(q, out.bits);
  return out;
}

SolutionVector solve_heuristic(const QuboMatrix& q, std::uint64_t budget, std::uint64_t seed,
                               const AnnealSchedule& schedule) {
  require(budget >= 1, "solve_heuristic: budget must be at least 1");
  require(schedule.sweeps_per_restart >= 1, "solve_heuristic: sweeps_per_restart must be >= 1");
  require(schedule.hot_fraction > 0 && schedule.cold_fraction > 0 &&
              schedule.cold_fraction <= schedule.hot_fraction,
          "solve_heuristic: invalid temperature fractions");
  const std::size_t n = q.order();

  std::vector<double> sym(n * n, 0.0);
  std::vector<double> diag(n);
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = q(i, i);
    double reach = std::abs(diag[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sym[i * n + j] = q(i, j) + q(j, i);
      reach += std::abs(sym[i * n + j]);
    }
    scale = std::max(scale, reach);
  }

  Rng rng(seed);
  if (scale == 0.0) {
    BinaryVector zero(n, 0);
    return {zero, objective(q, zero)};
  }

  const double t_hot = schedule.hot_fraction * scale;
  const double t_cold = schedule.cold_fraction * scale;
  const std::uint64_t sweeps = std::min(budget, schedule.sweeps_per_restart);
  const std::uint64_t restarts = std::max<std::uint64_t>(1, budget / schedule.sweeps_per_restart);

  BinaryVector x(n);
  std::vector<double> field(n);
  auto flip = [&](std::size_t j) {
    const double s = x[j] ? -1.0 : 1.0;
    x[j] ^= 1U;
    const double* col = &sym[j * n];
    for (std::size_t i = 0; i < n; ++i) field[i] += s * col[i];
  };
  auto delta = [&](std::size_t j) { return (x[j] ? -1.0 : 1.0) * (diag[j] + field[j]); };

  SolutionVector best;
  bool have_best = false;
  for (std::uint64_t r = 0; r < restarts; ++r) {
    for (auto& b : x) b = rng.bernoulli(0.5) ? 1 : 0;
    std::fill(field.begin(), field.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (x[j]) field[i] += sym[i * n + j];
      }
    }

    for (std::uint64_t s = 0; s < sweeps; ++s) {
      const double frac = sweeps == 1 ? 1.0 : static_cast<double>(s) / static_cast<double>(sweeps - 1);
      const double temp = t_hot * std::pow(t_cold / t_hot, frac);
      for (std::size_t j = 0; j < n; ++j) {
        const double d = delta(j);
        if (d <= 0.0 || rng.uniform01() < std::exp(-d / temp)) flip(j);
      }
    }

    // Greedy descent to a strict local minimum.
    for (;;) {
      std::size_t pick = n;
      double most = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double d = delta(j);
        if (d < most) {
          most = d;
          pick = j;
        }
      }
      if (pick == n || most > -1e-12 * scale) break;
      flip(pick);
    }

    const double value = objective(q, x);
    if (!have_best || value < best.value) {
      best = {x, value};
      have_best = true;
    }
  }
  return best;
}

QuboMatrix generate_matrix(const MatrixGenSpec& spec) {
  require(spec.n >= 1, "generate_matrix: n must be at least 1");
  require(spec.stddev > 0 && std::isfinite(spec.stddev), "generate_matrix: stddev must be positive");
  Rng rng(spec.seed);
  std::vector<double> entries(spec.n * spec.n);
  for (auto& e : entries) e = rng.normal(spec.mean, spec.stddev);
  return QuboMatrix(spec.n, std::move(entries));
}

nlohmann::ordered_json matrix_to_json(const QuboMatrix& q) {
  nlohmann::ordered_json j;
  j["n"] = q.order();
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < q.order(); ++i) {
    const auto r = q.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["entries"] = std::move(rows);
  return j;
}

QuboMatrix matrix_from_json(const nlohmann::json& j) {
  require(j.is_object(), "matrix JSON: expected an object");
  require(j.contains("entries") && j["entries"].is_array(), "matrix JSON: missing 'entries' array");
  const auto& rows = j["entries"];
  const std::size_t n = rows.size();
  if (j.contains("n")) {
    require(j["n"].is_number_integer() && j["n"].get<std::int64_t>() == static_cast<std::int64_t>(n),
            "matrix JSON: 'n' does not match number of rows");
  }
  require(n >= 1, "matrix JSON: empty matrix");
  std::vector<double> flat;
  flat.reserve(n * n);
  for (const auto& row : rows) {
    require(row.is_array() && row.size() == n, "matrix JSON: rows must form an n x n array");
    for (const auto& v : row) {
      require(v.is_number(), "matrix JSON: entries must be numbers");
      flat.push_back(v.get<double>());
    }
  }
  return QuboMatrix(n, std::move(flat));
}

nlohmann::ordered_json solution_to_json(const SolutionVector& s) {
  nlohmann::ordered_json j;
  j["bits"] = std::vector<int>(s.bits.begin(), s.bits.end());
  j["value"] = s.value;
  return j;
}

BinaryVector bits_from_json(const nlohmann::json& j) {
  require(j.is_array(), "binary vector JSON: expected an array");
  BinaryVector out;
  out.reserve(j.size());
  for (const auto& v : j) {
    require(v.is_number_integer(), "binary vector JSON: entries must be 0 or 1");
    const auto b = v.get<std::int64_t>();
    require(b == 0 || b == 1, "binary vector JSON: entries must be 0 or 1");
    out.push_back(static_cast<std::uint8_t>(b));
  }
  return out;
}

}  // namespace qubof
