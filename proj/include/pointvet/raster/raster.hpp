#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pointvet/core/camera.hpp"
#include "pointvet/core/types.hpp"

namespace pvet::raster {

// One point's contribution to one pixel. The pixel is implied by the list the
// fragment lives in.
struct Fragment {
  uint32_t point_index = 0;
  double depth = 0.0;
};

// Per-pixel fragment lists in CSR layout (count pass then fill pass). Each
// list is sorted ascending by (depth, point_index); ties on depth break by
// index, which makes the buffer deterministic for a fixed cloud and camera.
struct FragmentBuffer {
  int width = 0, height = 0;
  std::vector<uint32_t> offsets;  // size width*height + 1
  std::vector<Fragment> fragments;

  std::span<const Fragment> pixel(int row, int col) const {
    const size_t p = size_t(row) * width + col;
    return {fragments.data() + offsets[p], fragments.data() + offsets[p + 1]};
  }
  size_t total() const { return fragments.size(); }
};

// Rasterizes each visible point into the single pixel containing its
// projection (one-pixel points, no splat footprint).
FragmentBuffer collect_fragments(const PointCloud& cloud, const Camera& camera, int threads = 1);

// Front-to-back alpha blending: C = sum_m T_m * a_m * c_m + T_end * background
// with T_m the product of (1 - a_i) over all nearer fragments.
ImageBuffer render_blend(const PointCloud& cloud, const Camera& camera,
                         const FragmentBuffer& fragments, double steepness,
                         const Vec3& background, int threads = 1);

// Depth-tested rendering of binarized clouds: nearest fragment with a >= 0.5
// wins, background when none qualifies.
ImageBuffer render_opaque(const PointCloud& cloud, const Camera& camera,
                          const FragmentBuffer& fragments, double steepness,
                          const Vec3& background, int threads = 1);

struct BlendGradients {
  std::vector<Vec3> d_color;       // dLoss/dcolor per point
  std::vector<double> d_alpha_raw; // dLoss/dalpha_raw per point
};

// Analytic gradients of the blending equation chained through the sigmoid.
// Suffix transmittances are recomputed with a reverse sweep (composite-behind
// recurrence) instead of dividing by (1 - a), so a == 1 is not a singular
// configuration. Points without fragments get exact zeros.
BlendGradients backward_blend(const PointCloud& cloud, const Camera& camera,
                              const FragmentBuffer& fragments, double steepness,
                              const ImageBuffer& dloss_dpixel, const Vec3& background,
                              int threads = 1);

}  // namespace pvet::raster
