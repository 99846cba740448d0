#pragma once

#include <cstdint>
#include <random>

namespace mixedboot {

// Every consumer owns its stream; streams are never shared across workers.
using RandomStream = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based split: the seed for replicate `index` depends only on
// (master, index), so replicates can run in any order on any worker.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline RandomStream make_stream(std::uint64_t seed) { return RandomStream(seed); }

// Uniform integer in [0, n) by rejection; independent of the standard
// library's distribution implementation.
inline std::size_t uniform_index(RandomStream& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return static_cast<std::size_t>(draw % bound);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(RandomStream& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Fresh distribution per draw: no cached second deviate leaks between calls.
inline double standard_normal(RandomStream& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace mixedboot
