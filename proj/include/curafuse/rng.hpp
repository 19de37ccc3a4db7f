#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace curafuse {

/// SplitMix64 finalizer. Bijective on 64-bit values.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// 64-bit FNV-1a over bytes; used to turn strings into stream tags.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t h = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Derives an independent sub-seed from a root seed and a list of tags.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x9E3779B97F4A7C15ULL));
  return h;
}

/// Counter-based generator: the i-th output is mix64(seed + (i+1)*golden),
/// i.e. SplitMix64. Output is a pure function of (seed, counter), so streams
/// are reproducible on every platform.
class CounterRng {
public:
  explicit constexpr CounterRng(std::uint64_t seed, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  constexpr std::uint64_t next() noexcept {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n) by rejection (unbiased). n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = (0ULL - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next();
      if (r >= limit) return r % n;
    }
  }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

/// Fisher-Yates shuffle driven by CounterRng.
template <typename T>
void seeded_shuffle(std::span<T> items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace curafuse
