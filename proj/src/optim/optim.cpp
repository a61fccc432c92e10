#include "pointvet/optim/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pointvet/core/opacity.hpp"

namespace pvet::optim {

std::pair<double, ImageBuffer> loss_and_pixel_grad(const ImageBuffer& render,
                                                   const ImageBuffer& truth, LossKind kind) {
  if (!render.same_shape(truth))
    throw std::invalid_argument("loss_and_pixel_grad: image shape mismatch");
  ImageBuffer grad(render.width, render.height, render.channels);
  const double n = double(render.sample_count());
  double loss = 0.0;
  for (size_t i = 0; i < render.data.size(); ++i) {
    const double d = render.data[i] - truth.data[i];
    if (kind == LossKind::L1) {
      loss += std::abs(d);
      grad.data[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) / n;
    } else {
      loss += d * d;
      grad.data[i] = 2.0 * d / n;
    }
  }
  return {loss / n, std::move(grad)};
}

void OptimState::resize_moments(size_t n) {
  m_color.resize(n, Vec3{});
  v_color.resize(n, Vec3{});
  m_alpha.resize(n, 0.0);
  v_alpha.resize(n, 0.0);
}

void apply_opacity_bias(CloudGradients& grads, double epsilon) {
  for (double& g : grads.alpha_raw) g += epsilon;
}

namespace {

inline double adam_update(double grad, double& m, double& v, double lr, const AdamParams& p,
                          double bias1, double bias2) {
  m = p.beta1 * m + (1.0 - p.beta1) * grad;
  v = p.beta2 * v + (1.0 - p.beta2) * grad * grad;
  const double m_hat = m / bias1;
  const double v_hat = v / bias2;
  return -lr * m_hat / (std::sqrt(v_hat) + p.eps);
}

}  // namespace

void adam_step(OptimState& state, PointCloud& cloud, const CloudGradients& grads,
               double lr_scale) {
  const size_t n = cloud.size();
  if (grads.color.size() != n || grads.alpha_raw.size() != n)
    throw std::invalid_argument("adam_step: gradient arrays do not match point count");
  state.resize_moments(n);
  ++state.adam_t;
  const AdamParams& p = state.adam;
  const double bias1 = 1.0 - std::pow(p.beta1, double(state.adam_t));
  const double bias2 = 1.0 - std::pow(p.beta2, double(state.adam_t));
  const double lr_c = p.lr_color * lr_scale;
  const double lr_a = p.lr_alpha * lr_scale;

  for (size_t i = 0; i < n; ++i) {
    Point& pt = cloud.points[i];
    for (int ch = 0; ch < 3; ++ch) {
      const double step = adam_update(grads.color[i][ch], state.m_color[i][ch],
                                      state.v_color[i][ch], lr_c, p, bias1, bias2);
      pt.color[ch] = std::clamp(pt.color[ch] + step, 0.0, 1.0);
    }
    const double step =
        adam_update(grads.alpha_raw[i], state.m_alpha[i], state.v_alpha[i], lr_a, p, bias1, bias2);
    pt.alpha_raw = std::clamp(pt.alpha_raw + step, -50.0, 50.0);
  }
}

CleanReport clean_points(PointCloud& cloud, OptimState& state, double steepness) {
  CleanReport report;
  state.resize_moments(cloud.size());
  size_t keep = 0;
  for (size_t i = 0; i < cloud.size(); ++i) {
    if (alpha_of(cloud.points[i].alpha_raw, steepness) < state.clean_threshold) {
      ++report.removed_total;
      ++report.removed_by_generation[cloud.generation[i]];
      continue;
    }
    if (keep != i) {
      cloud.points[keep] = cloud.points[i];
      cloud.generation[keep] = cloud.generation[i];
      state.m_color[keep] = state.m_color[i];
      state.v_color[keep] = state.v_color[i];
      state.m_alpha[keep] = state.m_alpha[i];
      state.v_alpha[keep] = state.v_alpha[i];
    }
    ++keep;
  }
  cloud.points.resize(keep);
  cloud.generation.resize(keep);
  state.resize_moments(keep);
  return report;
}

double steepness_at(int64_t epoch, const OptimState& state) {
  if (!state.transition_start_epoch || epoch < *state.transition_start_epoch) return 1.0;
  const double t = double(epoch - *state.transition_start_epoch);
  return 10.0 + state.narrowing_factor * t;
}

}  // namespace pvet::optim
