#pragma once

#include <array>
#include <vector>

#include "pointvet/core/camera.hpp"
#include "pointvet/core/types.hpp"

namespace pvet::vet {

enum class ErrorMetric { L1, L2, SSIM };

struct ErrorMapConfig {
  ErrorMetric metric = ErrorMetric::L1;
  // Focus parameter l of the error preprocessing; negative means metric
  // default (0.3 for L1/SSIM, 0.01 for L2).
  double focus = -1.0;

  double resolved_focus() const {
    if (focus >= 0.0) return focus;
    return metric == ErrorMetric::L2 ? 0.01 : 0.3;
  }
};

struct ReconConfig {
  std::array<int, 3> dims{64, 64, 64};
  double tv_weight = 0.001;
  int iterations = 40;
  double step_size = 0.0;  // <= 0: 1 / number of views
  double ray_step = 0.5;   // fraction of voxel_size
};

// Single-channel error map in [0,1]: per pixel the channel mean of |r-t|
// (L1) or (r-t)^2 (L2), or the clamped structural dissimilarity of the
// luminance channels (SSIM).
ImageBuffer error_map(const ImageBuffer& render, const ImageBuffer& truth,
                      const ErrorMapConfig& config);

// I'(x,y) = clamp(I(x,y)*(1+l) - l, 0, 1): keeps high-error regions, zeroes
// small noise below l/(1+l).
ImageBuffer preprocess_error(const ImageBuffer& error, double focus);

// Per-axis interval between the ((1-f)/2) and (1-(1-f)/2) quantiles of the
// non-environment point coordinates, expanded by 2% per axis. Degenerate axes
// get a minimum-extent floor so the box always has volume.
Box3 scene_bbox(const PointCloud& cloud, double inner_fraction);

// Saturating ray-integral forward model: per pixel, march the central ray
// through the volume box with step ray_step*voxel_size, trilinear samples at
// voxel centers (clamped at the border), and output clamp(sum rho*step, 0, 1).
// Error maps live in [0,1], so the response saturates instead of following
// an attenuation law. Rays that miss the box output 0.
ImageBuffer forward_project(const ErrorVolume& volume, const Camera& camera,
                            double ray_step = 0.5, int threads = 1);

struct ReconResult {
  ErrorVolume volume;
  bool nothing_to_reconstruct = false;
  std::vector<double> data_objective;  // data term per accepted iterate, [0] = initial
};

// Projected gradient descent on
//   sum_views ||forward_project(V) - I'||^2 + tv_weight * TV(V),  V >= 0,
// with anisotropic TV (sum of absolute forward differences), the clamp's
// subgradient zero where the integral exceeds 1, and backtracking halving of
// the step whenever the full objective would increase.
ReconResult reconstruct_volume(const std::vector<ImageBuffer>& error_maps,
                               const std::vector<Camera>& cameras, const Box3& box,
                               const ReconConfig& config, int threads = 1);

// Anisotropic total variation of the density grid (test and diagnostics aid).
double total_variation(const ErrorVolume& volume);

}  // namespace pvet::vet
