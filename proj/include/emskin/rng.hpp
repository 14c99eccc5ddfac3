#pragma once

#include <cstdint>
#include <initializer_list>

namespace emskin {

// Counter-based generator: every draw is a pure function of (seed, stream ids),
// so parallel and serial evaluation orders produce identical numbers.

/// SplitMix64 finalizer; full-period bijective mixer on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Collapses a seed plus an id tuple into one well-mixed 64-bit word.
inline std::uint64_t hash_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t id : ids) h = mix64(h ^ mix64(id));
  return h;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
  return static_cast<double>(hash_stream(seed, ids) >> 11) * 0x1.0p-53;
}

}  // namespace emskin
