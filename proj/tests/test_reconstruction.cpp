#include <cmath>

#include "doctest.h"
#include "qubof/error.hpp"
#include "qubof/obfuscation.hpp"
#include "qubof/reconstruction.hpp"
#include "qubof/rng.hpp"
#include "support.hpp"

using namespace qubof;
using qubof::testing::paper_example;

namespace {

// What an honest exact solver returns for every transmitted matrix.
std::vector<BinaryVector> honest_answers(const TransmitSet& t) {
  std::vector<BinaryVector> out;
  for (const auto& m : t.matrices) out.push_back(solve_exact(m.to_qubo()).bits);
  return out;
}

}  // namespace

TEST_SUITE("reconstruction") {
  TEST_CASE("unshuffle with identity hooks is the identity") {
    ObfuscationParams p;
    p.digits = 3;
    p.seed = 2;
    const auto [t, s] = obfuscate(generate_matrix({5, 0.0, 4.0, 1}), p, {true, true});
    const std::vector<BinaryVector> v{{1, 0, 0, 1, 1}, {0, 0, 1, 1, 0}, {1, 1, 1, 0, 0}};
    CHECK(unshuffle(v, s) == v);
  }

  TEST_CASE("unshuffle preserves objective per digit matrix") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
      ObfuscationParams p;
      p.digits = 3;
      p.decoys = 2;
      p.seed = rng.next_u64();
      const auto q = generate_matrix({4, 0.0, 4.0, rng.next_u64()});
      const auto [t, s] = obfuscate(q, p);
      const auto answers = honest_answers(t);
      const auto v = unshuffle(answers, s);
      REQUIRE(v.size() == 3);
      const auto digits = digit_split(normalize(q, p.epsilon).matrix, p.radix, p.digits);
      for (int m = 1; m <= 3; ++m) {
        const auto slot = s.slot_of_digit(m);
        CHECK(objective(digits[m - 1].digits.to_qubo(), v[m - 1]) ==
              objective(t.matrices[slot].to_qubo(), answers[slot]));
      }
    }
  }

  TEST_CASE("unshuffle rejects mismatched inputs") {
    ObfuscationParams p;
    p.digits = 2;
    p.seed = 2;
    const auto [t, s] = obfuscate(generate_matrix({3, 0.0, 4.0, 1}), p);
    CHECK_THROWS_AS(unshuffle(std::vector<BinaryVector>{{1, 0, 1}}, s), ContractViolation);
    CHECK_THROWS_AS(unshuffle(std::vector<BinaryVector>{{1, 0, 1}, {1, 0}}, s), ContractViolation);
  }

  TEST_CASE("default weights") {
    CHECK(default_weights(2, 3).weights == std::vector<double>{0.5, 0.25, 0.125});
    CHECK(default_weights(10, 1).weights == std::vector<double>{0.1});
    for (int r : {2, 3, 10}) {
      const auto w = default_weights(r, 8).weights;
      for (std::size_t i = 1; i < w.size(); ++i) CHECK(w[i] < w[i - 1]);
    }
    CHECK_THROWS_AS((WeightVector{{1.0, 0.0}}.validate()), ContractViolation);
    CHECK_THROWS_AS((WeightVector{{}}.validate()), ContractViolation);
  }

  TEST_CASE("weighted average examples and range property") {
    const std::vector<BinaryVector> same{{1, 0, 1}, {1, 0, 1}, {1, 0, 1}};
    CHECK(weighted_average(same, default_weights(4, 3)).probs == std::vector<double>{1, 0, 1});
    const std::vector<BinaryVector> two{{1, 0}, {0, 0}};
    CHECK(weighted_average(two, WeightVector{{1, 1}}).probs == std::vector<double>{0.5, 0.0});
    CHECK_THROWS_AS(weighted_average(two, WeightVector{{1}}), ContractViolation);

    Rng rng(5);
    for (int c = 0; c < 10000; ++c) {
      const std::size_t k = 1 + rng.uniform_below(8), n = 1 + rng.uniform_below(6);
      std::vector<BinaryVector> v(k, BinaryVector(n));
      for (auto& x : v)
        for (auto& b : x) b = rng.bernoulli(0.5);
      WeightVector w;
      for (std::size_t m = 0; m < k; ++m) w.weights.push_back(std::ldexp(rng.uniform01() + 1e-3, -static_cast<int>(m)));
      for (double p : weighted_average(v, w).probs) REQUIRE((p >= 0.0 && p <= 1.0));
    }
  }

  TEST_CASE("sample_candidates examples") {
    for (const auto& s : sample_candidates({std::vector<double>(6, 0.0)}, 50, 1)) CHECK(s == BinaryVector(6, 0));
    for (const auto& s : sample_candidates({std::vector<double>(6, 1.0)}, 50, 1)) CHECK(s == BinaryVector(6, 1));
    const std::size_t t = 10000;
    const auto samples = sample_candidates({std::vector<double>(8, 0.5)}, t, 2);
    const double bound = 3.0 * std::sqrt(0.25 / t);
    for (std::size_t i = 0; i < 8; ++i) {
      double mean = 0.0;
      for (const auto& s : samples) mean += s[i];
      mean /= t;
      CHECK(std::abs(mean - 0.5) < bound);
    }
    CHECK(sample_candidates({std::vector<double>(8, 0.5)}, 5, 3) == sample_candidates({std::vector<double>(8, 0.5)}, 5, 3));
    CHECK_THROWS_AS(sample_candidates({std::vector<double>(3, 0.5)}, 0, 3), ContractViolation);
  }

  TEST_CASE("select_best examples") {
    const auto q = paper_example();
    const auto one = select_best(std::vector<BinaryVector>{{1, 0, 0, 0}}, q);
    CHECK(one.bits == BinaryVector{1, 0, 0, 0});
    CHECK(one.value == 6.0);
    const std::vector<BinaryVector> cands{{1, 1, 1, 1}, {0, 1, 1, 0}, {1, 0, 0, 1}, {0, 0, 1, 0}};
    const auto best = select_best(cands, q);
    CHECK(best.bits == BinaryVector{0, 1, 1, 0});
    CHECK(best.value == -24.0);
    for (const auto& c : cands) CHECK(best.value <= objective(q, c));
    // First of equal candidates.
    const auto tie = select_best(std::vector<BinaryVector>{{0, 0, 1, 1}, {0, 0, 1, 0}}, QuboMatrix::zeros(4));
    CHECK(tie.bits == BinaryVector{0, 0, 1, 1});
    CHECK_THROWS_AS(select_best(std::vector<BinaryVector>{}, q), ContractViolation);
  }

  TEST_CASE("adding candidates never increases the selected value") {
    const auto q = generate_matrix({10, 0.0, 4.0, 6});
    const auto cands = sample_candidates({std::vector<double>(10, 0.5)}, 200, 8);
    double prev = INFINITY;
    for (std::size_t len = 1; len <= cands.size(); len += 7) {
      const double v = select_best(std::span<const BinaryVector>(cands.data(), len), q).value;
      CHECK(v <= prev);
      prev = v;
    }
  }

  TEST_CASE("identical answers collapse the sampling step") {
    ObfuscationParams p;
    p.digits = 3;
    p.seed = 2;
    const auto q = generate_matrix({6, 0.0, 4.0, 1});
    const auto [t, s] = obfuscate(q, p, {false, true});
    const BinaryVector v{1, 0, 1, 1, 0, 0};
    // Feed back answers that unpermute to v in every slot.
    std::vector<BinaryVector> answers;
    for (int m = 1; m <= 3; ++m) {
      const auto& sigma = s.sigmas[m - 1];
      BinaryVector a(6);
      for (std::size_t i = 0; i < 6; ++i) a[i] = v[sigma(i)];
      answers.push_back(a);
    }
    CHECK(unshuffle(answers, s) == std::vector<BinaryVector>(3, v));
    const auto sol = recover(answers, s, q, {50, std::nullopt, 4});
    CHECK(sol.bits == v);
    CHECK(sol.value == objective(q, v));
  }

  TEST_CASE("k = 1 with the true optimum answered recovers it") {
    const auto q = generate_matrix({8, 0.0, 4.0, 12});
    ObfuscationParams p;
    p.digits = 1;
    p.seed = 9;
    const auto [t, s] = obfuscate(q, p);
    const auto opt = solve_exact(q);
    BinaryVector a(8);
    for (std::size_t i = 0; i < 8; ++i) a[i] = opt.bits[s.sigmas[0](i)];
    const auto sol = recover(std::vector<BinaryVector>{a}, s, q, {100, std::nullopt, 1});
    CHECK(sol.value <= opt.value);
  }

  TEST_CASE("recover end to end on the worked example") {
    const auto q = paper_example();
    const double truth = solve_exact(q).value;
    double acc = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      ObfuscationParams p;
      p.radix = 10;
      p.digits = 4;
      p.seed = seed;
      const auto [t, s] = obfuscate(q, p);
      const auto sol = recover(honest_answers(t), s, q, {200, std::nullopt, seed + 1000});
      CHECK(sol.value == objective(q, sol.bits));
      acc += sol.value / truth;
    }
    CHECK(acc / 20 >= 0.99);
  }

  TEST_CASE("recover is deterministic and drops decoy answers") {
    const auto q = generate_matrix({8, 0.0, 4.0, 3});
    ObfuscationParams p;
    p.digits = 3;
    p.decoys = 2;
    p.seed = 4;
    const auto [t, s] = obfuscate(q, p);
    auto answers = honest_answers(t);
    const auto a = recover(answers, s, q, {100, std::nullopt, 7});
    CHECK(a == recover(answers, s, q, {100, std::nullopt, 7}));
    for (auto slot : s.decoy_slots) answers[slot] = BinaryVector(8, 1);
    CHECK(recover(answers, s, q, {100, std::nullopt, 7}) == a);
    CHECK_THROWS_AS(recover(answers, s, q, {100, WeightVector{{1.0}}, 7}), ContractViolation);
  }

  TEST_CASE("with identity hooks recover matches the unpermuted pipeline") {
    const auto q = generate_matrix({7, 0.0, 4.0, 3});
    ObfuscationParams p;
    p.digits = 3;
    p.seed = 4;
    const auto [t, s] = obfuscate(q, p, {true, true});
    const auto answers = honest_answers(t);
    const auto w = default_weights(p.radix, p.digits);
    const auto direct = select_best(sample_candidates(weighted_average(answers, w), 60, 5), q);
    CHECK(recover(answers, s, q, {60, std::nullopt, 5}) == direct);
  }
}
