#pragma once

// Counter-based randomness: every draw is a pure function of (seed, stream, a, b).
// An object's truth and each of its labels therefore come out the same no matter
// which policy is asking, which gives common random numbers across policies,
// horizons and costs.

#include <cstdint>

namespace adasprt::sim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform on [0, 1) with 53 random bits.
inline double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Stream id for object `k` of macro replication `macro`.
inline std::uint64_t object_stream(std::uint64_t macro, std::uint64_t k) { return (macro << 32) ^ k; }

/// Uniform on [0, 1) from a 64-bit engine, with 53 random bits.
template <class Engine>
double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace adasprt::sim
