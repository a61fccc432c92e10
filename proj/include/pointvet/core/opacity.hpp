#pragma once

#include <cmath>

namespace pvet {

inline double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Maps a raw opacity to [0,1]. Steepness is 1 during the blending phase and
// grows as 10 + f*t once the transition to opaque rendering starts.
inline double alpha_of(double alpha_raw, double steepness) {
  return stable_sigmoid(steepness * alpha_raw);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace pvet
