#pragma once

#include <cstdint>
#include <random>

namespace pear {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Named substream: one independent generator per (seed, tag) pair.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t tag) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(tag << 1 | 1)));
}

}  // namespace pear
