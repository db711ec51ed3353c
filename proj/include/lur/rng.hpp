#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace lur {

/// SplitMix64 finaliser. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Child seed for stream `stream_id` of a parent seed:
///   derive_seed(seed, id) = mix64(seed + 0x9E3779B97F4A7C15 * (id + 1))
/// Used for every seeded sub-computation (trees, CV folds, permutation
/// repeats) so results depend only on (seed, id), never on scheduling.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id);

/// xoshiro256** generator, state filled from SplitMix64(seed).
///
/// All distributions used by the library are implemented here on top of
/// raw 64-bit output, so sequences are identical across standard library
/// implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  /// Generator for stream `stream_id` of `seed` (see derive_seed).
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) { return Rng(derive_seed(seed, stream_id)); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform integer in [0, n). Rejection sampling, unbiased. n must be > 0.
  std::uint64_t uniform_below(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  /// Fisher-Yates shuffle driven by uniform_below.
  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace lur
