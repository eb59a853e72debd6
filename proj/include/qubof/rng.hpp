#pragma once

// Deterministic random source shared by every module.
//
// Generator: xoshiro256** 1.0 (Blackman & Vigna), state seeded by four
// successive outputs of splitmix64 starting from the 64-bit seed.
// Derived quantities are defined on top of next_u64() as:
//   uniform01()      (next_u64() >> 11) * 2^-53, in [0, 1)
//   uniform_below(b) Lemire multiply-shift with rejection, unbiased
//   normal(mu, sd)   Box-Muller cosine branch, two draws per variate:
//                    u1 = 1 - uniform01(), u2 = uniform01(),
//                    mu + sd * sqrt(-2 ln u1) * cos(2 pi u2)
//   bernoulli(p)     uniform01() < p
//   shuffle          Fisher-Yates from the last index down,
//                    j = uniform_below(i + 1)
// Every generated artifact (matrices, permutations, decoys, samples) is a
// pure function of its seed under these rules.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace qubof {

constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a base seed with a sequence of tags into an independent stream seed.
template <typename... Tags>
constexpr std::uint64_t derive_seed(std::uint64_t base, Tags... tags) noexcept {
  std::uint64_t state = base;
  std::uint64_t out = splitmix64(state);
  ((state ^= static_cast<std::uint64_t>(tags) * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL,
    out ^= splitmix64(state)),
   ...);
  return out;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() noexcept { return next_u64(); }

  std::uint64_t next_u64() noexcept;
  double uniform01() noexcept;
  std::uint64_t uniform_below(std::uint64_t bound) noexcept;
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) noexcept;
  double normal(double mean, double stddev) noexcept;
  bool bernoulli(double p) noexcept { return uniform01() < p; }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace qubof
