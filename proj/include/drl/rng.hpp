#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace drl {

// splitmix64 finalizer, used to derive independent seed substreams.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// FNV-1a
inline std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Named substreams: every random artifact in the lab is seeded through
// derive_seed chains rooted at one master seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
  return mix64(base ^ hash_str(stream));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view stream,
                                 std::uint64_t index) {
  return mix64(mix64(base ^ hash_str(stream)) + 0x9e3779b97f4a7c15ull * (index + 1));
}

using Rng = std::mt19937_64;

// Pinned sampling algorithms. std::uniform_real_distribution and friends are
// implementation-defined, which would break bit-reproducible reruns if the
// toolchain changes.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

// Box-Muller, cosine branch only so each call consumes exactly two draws.
inline double normal(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  double r = std::sqrt(-2.0 * std::log1p(-u1));
  return r * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace drl
