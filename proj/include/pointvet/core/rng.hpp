#pragma once

#include <cstdint>
#include <random>

namespace pvet {

// splitmix64 finalizer; good avalanche, cheap.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Independent per-item seed so parallel iteration order cannot change the
// stream an item sees.
inline uint64_t substream_seed(uint64_t master, uint64_t index) {
  return mix64(master ^ mix64(index));
}

// mt19937_64 output is fully specified by the standard; mapping to [0,1)
// by hand keeps the doubles reproducible across library versions.
inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace pvet
