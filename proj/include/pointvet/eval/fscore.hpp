#pragma once

#include "pointvet/core/types.hpp"

namespace pvet::eval {

struct FScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  double tau = 0.0;
};

// Geometric precision/recall at distance threshold tau: precision is the
// fraction of reconstructed points within tau of some truth point, recall the
// converse. Grid-accelerated but exact (identical to brute force).
FScoreReport f_score(const PointCloud& reconstructed, const PointCloud& truth, double tau);

}  // namespace pvet::eval
