#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace ergodyn {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `index` of `master`. Distinct (master, index) pairs
/// give unrelated seeds, so seed sweeps can run in any order or concurrently.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Stream tags used when one run needs several independent generators.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamSampling = 2;
inline constexpr std::uint64_t kStreamResample = 3;
inline constexpr std::uint64_t kStreamDiagnostics = 4;

/// Uniform index in [0, n). Implemented here rather than with
/// std::uniform_int_distribution so sampled batches do not depend on the
/// standard library vendor.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = n;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

/// Uniform real in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Standard normal via Box-Muller (portable across standard libraries).
inline double standard_normal(Rng& rng) {
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

}  // namespace ergodyn
