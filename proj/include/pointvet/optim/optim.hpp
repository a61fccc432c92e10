#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "pointvet/core/types.hpp"

namespace pvet::optim {

enum class LossKind { L1, L2 };

// Mean per-sample loss over all width*height*channels samples plus its exact
// per-pixel gradient image (same shape as the inputs).
std::pair<double, ImageBuffer> loss_and_pixel_grad(const ImageBuffer& render,
                                                   const ImageBuffer& truth, LossKind kind);

struct AdamParams {
  double lr_color = 0.02;
  double lr_alpha = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Per-point gradient arrays, sized to the cloud.
struct CloudGradients {
  std::vector<Vec3> color;
  std::vector<double> alpha_raw;
};

struct OptimState {
  int64_t epoch = 0;
  int64_t adam_t = 0;  // Adam step counter for bias correction
  AdamParams adam;

  std::vector<Vec3> m_color, v_color;
  std::vector<double> m_alpha, v_alpha;

  std::optional<int> transition_start_epoch;
  double narrowing_factor = 0.01;  // f in the steepness ramp
  double opacity_bias = 1e-7;      // epsilon added to every alpha gradient
  int clean_every = 50;
  double clean_threshold = 0.3;

  // Sizes moment arrays to `n` points, zeroing any new entries.
  void resize_moments(size_t n);
  size_t moment_count() const { return m_alpha.size(); }
};

// Adds the opacity bias to every point's raw-opacity gradient; descent then
// pushes unused points toward small opacity.
void apply_opacity_bias(CloudGradients& grads, double epsilon);

// One bias-corrected Adam step on colors and raw opacities. Colors are
// clamped to [0,1] afterwards, alpha_raw to [-50, 50]. `lr_scale` applies the
// schedule decay to both learning rates.
void adam_step(OptimState& state, PointCloud& cloud, const CloudGradients& grads,
               double lr_scale = 1.0);

struct CleanReport {
  size_t removed_total = 0;
  std::map<int32_t, size_t> removed_by_generation;
};

// Removes points with alpha_of(alpha_raw, steepness) strictly below the
// threshold; moment arrays and generation tags are compacted to match.
CleanReport clean_points(PointCloud& cloud, OptimState& state, double steepness);

// 1 before the transition starts, afterwards 10 + f * t with t counted in
// epochs since transition start.
double steepness_at(int64_t epoch, const OptimState& state);

}  // namespace pvet::optim
