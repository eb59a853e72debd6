#include <array>
#include <cmath>
#include <map>

#include "doctest.h"
#include "qubof/rng.hpp"

namespace {

// Reference xoshiro256**, written from the published algorithm.
struct RefXoshiro {
  std::array<std::uint64_t, 4> s;
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t next() {
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
  }
};

}  // namespace

TEST_SUITE("rng") {
  TEST_CASE("splitmix64 matches published outputs for seed 1234567") {
    std::uint64_t state = 1234567;
    CHECK(qubof::splitmix64(state) == 6457827717110365317ULL);
    CHECK(qubof::splitmix64(state) == 3203168211198807973ULL);
    CHECK(qubof::splitmix64(state) == 9817491932198370423ULL);
    CHECK(qubof::splitmix64(state) == 4593380528125082431ULL);
    CHECK(qubof::splitmix64(state) == 16408922859458223821ULL);
  }

  TEST_CASE("reference xoshiro256** matches published outputs for state 1,2,3,4") {
    RefXoshiro ref{{1, 2, 3, 4}};
    CHECK(ref.next() == 11520ULL);
    CHECK(ref.next() == 0ULL);
    CHECK(ref.next() == 1509978240ULL);
    CHECK(ref.next() == 1215971899390074240ULL);
  }

  TEST_CASE("Rng is xoshiro256** seeded by four splitmix64 words") {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, 0xdeadbeefULL}) {
      std::uint64_t st = seed;
      RefXoshiro ref{};
      for (auto& w : ref.s) w = qubof::splitmix64(st);
      qubof::Rng rng(seed);
      for (int i = 0; i < 1000; ++i) REQUIRE(rng.next_u64() == ref.next());
    }
  }

  TEST_CASE("uniform01 is the top 53 bits scaled") {
    qubof::Rng a(9), b(9);
    for (int i = 0; i < 100; ++i) {
      const double u = a.uniform01();
      CHECK(u == std::ldexp(static_cast<double>(b.next_u64() >> 11), -53));
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
    }
  }

  TEST_CASE("uniform_below stays in range and is roughly uniform") {
    qubof::Rng rng(5);
    std::map<std::uint64_t, int> hist;
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) {
      const auto v = rng.uniform_below(7);
      REQUIRE(v < 7);
      ++hist[v];
    }
    double chi2 = 0.0;
    for (auto& [v, c] : hist) chi2 += std::pow(c - draws / 7.0, 2) / (draws / 7.0);
    CHECK(chi2 < 22.46);  // chi-square 6 dof, p = 0.001
    CHECK(rng.uniform_below(1) == 0);
  }

  TEST_CASE("uniform_int covers both ends") {
    qubof::Rng rng(3);
    bool lo = false, hi = false;
    for (int i = 0; i < 1000; ++i) {
      const auto v = rng.uniform_int(-3, 3);
      REQUIRE(v >= -3);
      REQUIRE(v <= 3);
      lo = lo || v == -3;
      hi = hi || v == 3;
    }
    CHECK(lo);
    CHECK(hi);
  }

  TEST_CASE("normal has the requested moments") {
    qubof::Rng rng(17);
    const int count = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < count; ++i) {
      const double x = rng.normal(2.0, 4.0);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    CHECK(mean == doctest::Approx(2.0).epsilon(0.02));
    CHECK(std::sqrt(var) == doctest::Approx(4.0).epsilon(0.01));
  }

  TEST_CASE("derive_seed separates tags and is deterministic") {
    CHECK(qubof::derive_seed(1, 2) == qubof::derive_seed(1, 2));
    CHECK(qubof::derive_seed(1, 2) != qubof::derive_seed(1, 3));
    CHECK(qubof::derive_seed(1, 2) != qubof::derive_seed(2, 2));
    CHECK(qubof::derive_seed(1, 2, 3) != qubof::derive_seed(1, 3, 2));
    CHECK(qubof::derive_seed(1) != qubof::derive_seed(1, 0));
  }

  TEST_CASE("shuffle is a permutation and hits every arrangement of 3") {
    qubof::Rng rng(2);
    std::map<std::array<int, 3>, int> seen;
    for (int i = 0; i < 6000; ++i) {
      std::array<int, 3> a{0, 1, 2};
      rng.shuffle(std::span<int>(a));
      ++seen[a];
    }
    CHECK(seen.size() == 6);
    for (auto& [a, c] : seen) CHECK(c > 850);
  }
}
