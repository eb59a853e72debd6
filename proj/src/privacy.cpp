#include "qubof/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>

#include "qubof/error.hpp"
#include "qubof/rng.hpp"

namespace qubof {

SignMatrix sign_matrix(const QuboMatrix& q) {
  SignMatrix s{q.order(), std::vector<std::int8_t>(q.entries().size())};
  const auto e = q.entries();
  for (std::size_t i = 0; i < e.size(); ++i) s.signs[i] = static_cast<std::int8_t>((e[i] > 0) - (e[i] < 0));
  return s;
}

SignMatrix permute_signs(const SignMatrix& s, const Permutation& p) {
  require(p.size() == s.n, "permute_signs: permutation size differs from order");
  SignMatrix out{s.n, std::vector<std::int8_t>(s.signs.size())};
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = 0; j < s.n; ++j) out.signs[i * s.n + j] = s(p(i), p(j));
  }
  return out;
}

namespace {

using Coloring = std::vector<int>;

class AutomorphismSearch {
 public:
  explicit AutomorphismSearch(const SignMatrix& s) : s_(s), n_(s.n) {}

  Coloring initial() const {
    Coloring c(n_);
    for (std::size_t v = 0; v < n_; ++v) c[v] = s_(v, v) + 1;
    return c;
  }

  // Refines both colourings jointly so equal colours mean equal invariants
  // across the two sides. False when the colour histograms diverge.
  bool refine(Coloring& a, Coloring& b) const {
    std::size_t classes = count_classes(a);
    for (;;) {
      std::map<std::vector<int>, int> ids;
      std::vector<std::vector<int>> sig_a(n_), sig_b(n_);
      for (std::size_t v = 0; v < n_; ++v) {
        sig_a[v] = signature(a, v);
        sig_b[v] = signature(b, v);
        ids.emplace(sig_a[v], 0);
        ids.emplace(sig_b[v], 0);
      }
      int next = 0;
      for (auto& [sig, id] : ids) id = next++;
      for (std::size_t v = 0; v < n_; ++v) {
        a[v] = ids[sig_a[v]];
        b[v] = ids[sig_b[v]];
      }
      if (!same_histogram(a, b)) return false;
      const std::size_t refined = count_classes(a);
      if (refined == classes) return true;
      classes = refined;
    }
  }

  // Is there an automorphism carrying colouring a onto colouring b?
  bool exists(Coloring a, Coloring b) const {
    if (!refine(a, b)) return false;
    const int fresh = *std::max_element(a.begin(), a.end()) + 1;
    const std::size_t v = pick_target_cell(a);
    if (v == n_) return verify(a, b);
    for (std::size_t w = 0; w < n_; ++w) {
      if (b[w] != a[v]) continue;
      Coloring a2 = a, b2 = b;
      a2[v] = fresh;
      b2[w] = fresh;
      if (exists(std::move(a2), std::move(b2))) return true;
    }
    return false;
  }

  std::uint64_t count() const {
    Coloring base = initial();
    Coloring mirror = base;
    refine(base, mirror);
    std::uint64_t total = 1;
    for (;;) {
      const std::size_t b = pick_target_cell(base);
      if (b == n_) return total;
      const int fresh = *std::max_element(base.begin(), base.end()) + 1;
      std::uint64_t orbit = 0;
      for (std::size_t u = 0; u < n_; ++u) {
        if (base[u] != base[b]) continue;
        if (u == b) {
          ++orbit;
          continue;
        }
        Coloring a = base, c = base;
        a[b] = fresh;
        c[u] = fresh;
        if (exists(std::move(a), std::move(c))) ++orbit;
      }
      total *= orbit;
      base[b] = fresh;
      Coloring again = base;
      refine(base, again);
    }
  }

 private:
  std::vector<int> signature(const Coloring& c, std::size_t v) const {
    const int colors = *std::max_element(c.begin(), c.end()) + 1;
    std::vector<int> sig(1 + 6 * static_cast<std::size_t>(colors), 0);
    sig[0] = c[v];
    for (std::size_t w = 0; w < n_; ++w) {
      if (w == v) continue;
      const auto base = static_cast<std::size_t>(c[w]) * 6;
      sig[1 + base + static_cast<std::size_t>(s_(v, w) + 1)] += 1;
      sig[1 + base + 3 + static_cast<std::size_t>(s_(w, v) + 1)] += 1;
    }
    return sig;
  }

  static std::size_t count_classes(const Coloring& c) {
    std::vector<int> sorted = c;
    std::sort(sorted.begin(), sorted.end());
    return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  }

  static bool same_histogram(const Coloring& a, const Coloring& b) {
    std::vector<int> x = a, y = b;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    return x == y;
  }

  // First vertex of the smallest non-singleton colour class, or n when the
  // colouring is discrete.
  std::size_t pick_target_cell(const Coloring& c) const {
    std::map<int, std::size_t> sizes;
    for (int col : c) ++sizes[col];
    std::size_t pick = n_;
    std::size_t best = n_ + 1;
    for (std::size_t v = 0; v < n_; ++v) {
      const std::size_t sz = sizes[c[v]];
      if (sz > 1 && sz < best) {
        best = sz;
        pick = v;
      }
    }
    return pick;
  }

  bool verify(const Coloring& a, const Coloring& b) const {
    std::map<int, std::size_t> where;
    for (std::size_t w = 0; w < n_; ++w) where[b[w]] = w;
    std::vector<std::size_t> map(n_);
    for (std::size_t v = 0; v < n_; ++v) map[v] = where.at(a[v]);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        if (s_(map[i], map[j]) != s_(i, j)) return false;
      }
    }
    return true;
  }

  const SignMatrix& s_;
  std::size_t n_;
};

}  // namespace

std::uint64_t count_automorphisms(const SignMatrix& s, std::size_t cap) {
  require(s.signs.size() == s.n * s.n && s.n >= 1, "count_automorphisms: malformed sign matrix");
  const std::size_t limit = std::min(cap, kMaxAutomorphismOrder);
  if (s.n > limit) {
    throw SizeLimitError("count_automorphisms: order " + std::to_string(s.n) + " exceeds cap " +
                         std::to_string(limit));
  }
  return AutomorphismSearch(s).count();
}

double recovery_probability(std::uint64_t alpha, std::size_t k, std::size_t n) {
  require(alpha >= 1 && k >= 1 && n >= 1, "recovery_probability: alpha, k, n must be positive");
  return -(static_cast<double>(k - 1) * std::log(static_cast<double>(alpha)) +
           std::lgamma(static_cast<double>(k) + 1.0) + std::lgamma(static_cast<double>(n) + 1.0));
}

std::vector<UniformityStat> digit_uniformity(std::span<const DigitMatrix> digits, double threshold) {
  require(!digits.empty(), "digit_uniformity: no matrices");
  std::map<int, std::vector<std::uint64_t>> counts;
  std::map<int, int> radix_of;
  for (const auto& dm : digits) {
    auto& bins = counts[dm.position];
    if (bins.empty()) {
      bins.assign(static_cast<std::size_t>(dm.radix), 0);
      radix_of[dm.position] = dm.radix;
    }
    require(radix_of[dm.position] == dm.radix, "digit_uniformity: radix differs within a position");
    for (auto e : dm.digits.entries) {
      const auto mag = static_cast<std::size_t>(std::abs(e));
      require(mag < bins.size(), "digit_uniformity: digit exceeds radix bound");
      ++bins[mag];
    }
  }

  std::vector<UniformityStat> out;
  for (const auto& [position, bins] : counts) {
    UniformityStat st;
    st.position = position;
    st.samples = std::accumulate(bins.begin(), bins.end(), std::uint64_t{0});
    st.dof = static_cast<int>(bins.size()) - 1;
    const double expected = static_cast<double>(st.samples) / static_cast<double>(bins.size());
    for (auto c : bins) {
      const double d = static_cast<double>(c) - expected;
      st.chi2 += d * d / expected;
    }
    boost::math::chi_squared dist(st.dof);
    st.p_value = boost::math::cdf(boost::math::complement(dist, st.chi2));
    st.uniform = st.p_value >= threshold;
    out.push_back(st);
  }
  return out;
}

PrivacyReport privacy_report(const QuboMatrix& q, const ObfuscationParams& params,
                             std::size_t automorphism_cap) {
  params.validate();
  PrivacyReport r;
  r.k = static_cast<std::size_t>(params.digits);
  r.n = q.order();
  try {
    r.alpha = count_automorphisms(sign_matrix(q), automorphism_cap);
  } catch (const SizeLimitError&) {
    r.alpha = 1;
    r.alpha_exact = false;
  }
  r.log_recovery_probability = recovery_probability(r.alpha, r.k, r.n);
  const auto normalized = normalize(q, params.epsilon);
  const auto digits = digit_split(normalized.matrix, params.radix, params.digits);
  r.digit_uniformity = digit_uniformity(digits);
  return r;
}

nlohmann::ordered_json privacy_report_to_json(const PrivacyReport& r) {
  nlohmann::ordered_json j;
  j["alpha"] = r.alpha;
  j["alpha_exact"] = r.alpha_exact;
  j["k"] = r.k;
  j["n"] = r.n;
  j["log_recovery_probability"] = r.log_recovery_probability;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& st : r.digit_uniformity) {
    nlohmann::ordered_json e;
    e["position"] = st.position;
    e["samples"] = st.samples;
    e["chi2"] = st.chi2;
    e["dof"] = st.dof;
    e["p_value"] = st.p_value;
    e["uniform"] = st.uniform;
    arr.push_back(std::move(e));
  }
  j["digit_uniformity"] = std::move(arr);
  return j;
}

AttackOutcome simulate_guessing_attack(const QuboMatrix& q, const ObfuscationParams& params,
                                       std::uint64_t trials, std::uint64_t seed) {
  params.validate();
  require(params.decoys == 0, "simulate_guessing_attack: decoys are not modelled");
  const std::size_t n = q.order();
  require(n <= 8, "simulate_guessing_attack: order too large for permutation enumeration");
  const auto k = static_cast<std::size_t>(params.digits);

  const auto truth = digit_split(normalize(q, params.epsilon).matrix, params.radix, params.digits);

  std::vector<Permutation> all_perms;
  {
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    do {
      all_perms.emplace_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  }

  auto signs_of = [n](const IntMatrix& m) {
    SignMatrix s{n, std::vector<std::int8_t>(m.entries.size())};
    for (std::size_t e = 0; e < m.entries.size(); ++e) {
      s.signs[e] = static_cast<std::int8_t>((m.entries[e] > 0) - (m.entries[e] < 0));
    }
    return s;
  };

  AttackOutcome out;
  out.trials = trials;
  std::vector<std::size_t> consistent;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    ObfuscationParams p = params;
    p.seed = derive_seed(seed, trial, 0);
    const auto captured = obfuscate(q, p).transmit;
    Rng guesser(derive_seed(seed, trial, 1));

    const auto slot_guess = Permutation::random(k, guesser);
    const auto& first = all_perms[guesser.uniform_below(all_perms.size())];
    const auto lead = permute_matrix(captured.matrices[slot_guess(0)], first);
    bool ok = lead == truth[0].digits;
    const auto reference = signs_of(lead);

    for (std::size_t m = 1; m < k; ++m) {
      const auto& sent = captured.matrices[slot_guess(m)];
      consistent.clear();
      for (std::size_t idx = 0; idx < all_perms.size(); ++idx) {
        if (signs_of(permute_matrix(sent, all_perms[idx])) == reference) consistent.push_back(idx);
      }
      if (consistent.empty()) {
        ok = false;
        continue;
      }
      const auto& pick = all_perms[consistent[guesser.uniform_below(consistent.size())]];
      if (ok && !(permute_matrix(sent, pick) == truth[m].digits)) ok = false;
    }
    if (ok) ++out.successes;
  }
  return out;
}

}  // namespace qubof
