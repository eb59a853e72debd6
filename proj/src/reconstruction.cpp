#include "qubof/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qubof/error.hpp"
#include "qubof/kernels.hpp"

namespace qubof {

void WeightVector::validate() const {
  require(!weights.empty(), "weights: empty weight vector");
  for (double w : weights) require(std::isfinite(w) && w > 0.0, "weights: entries must be finite and positive");
}

std::vector<BinaryVector> unshuffle(std::span<const BinaryVector> vectors, const ObfuscationSecret& secret) {
  secret.validate();
  require(vectors.size() == secret.slot_count(),
          "unshuffle: expected " + std::to_string(secret.slot_count()) + " vectors, got " +
              std::to_string(vectors.size()));
  for (const auto& v : vectors) {
    require(v.size() == secret.n, "unshuffle: vector length differs from matrix order");
  }
  const auto k = static_cast<std::size_t>(secret.params.digits);
  std::vector<BinaryVector> out;
  out.reserve(k);
  for (std::size_t m = 0; m < k; ++m) {
    const auto& permuted = vectors[secret.slot_of_digit(static_cast<int>(m + 1))];
    const auto inv = secret.sigmas[m].inverse();
    BinaryVector v(secret.n);
    for (std::size_t i = 0; i < secret.n; ++i) v[i] = permuted[inv(i)];
    out.push_back(std::move(v));
  }
  return out;
}

WeightVector default_weights(int radix, int digits) {
  require(radix >= 2 && digits >= 1, "default_weights: need radix >= 2 and digits >= 1");
  WeightVector w;
  w.weights.reserve(static_cast<std::size_t>(digits));
  for (int m = 1; m <= digits; ++m) w.weights.push_back(std::pow(static_cast<double>(radix), -m));
  return w;
}

ProbabilityVector weighted_average(std::span<const BinaryVector> vectors, const WeightVector& w) {
  w.validate();
  require(vectors.size() == w.weights.size(), "weighted_average: one weight per vector required");
  const std::size_t n = vectors.front().size();
  double total = 0.0;
  for (double x : w.weights) total += x;
  ProbabilityVector p{std::vector<double>(n, 0.0)};
  for (std::size_t m = 0; m < vectors.size(); ++m) {
    require(vectors[m].size() == n, "weighted_average: vectors differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      require(vectors[m][i] <= 1, "weighted_average: vectors must be binary");
      if (vectors[m][i]) p.probs[i] += w.weights[m];
    }
  }
  for (auto& x : p.probs) x = std::min(1.0, x / total);
  return p;
}

std::vector<BinaryVector> sample_candidates(const ProbabilityVector& p, std::size_t t, std::uint64_t seed) {
  require(t >= 1, "sample_candidates: need at least one sample");
  for (double x : p.probs) require(x >= 0.0 && x <= 1.0, "sample_candidates: probabilities must lie in [0, 1]");
  return kernels::sample_bernoulli(p.probs, t, seed);
}

SolutionVector select_best(std::span<const BinaryVector> candidates, const QuboMatrix& q) {
  require(!candidates.empty(), "select_best: no candidates");
  const auto values = kernels::evaluate_all(q, candidates);
  const std::size_t best = kernels::argmin_first(values);
  return {candidates[best], values[best]};
}

SolutionVector recover(std::span<const BinaryVector> vectors, const ObfuscationSecret& secret,
                       const QuboMatrix& q, const RecoverOptions& options) {
  require(q.order() == secret.n, "recover: matrix order differs from secret");
  const auto digits = unshuffle(vectors, secret);
  const auto weights = options.weights.value_or(default_weights(secret.params.radix, secret.params.digits));
  const auto probs = weighted_average(digits, weights);
  const auto candidates = sample_candidates(probs, options.samples, options.seed);
  return select_best(candidates, q);
}

}  // namespace qubof
