#include "pointvet/vet/vet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "pointvet/eval/metrics.hpp"
#include "pointvet/parallel.hpp"

namespace pvet::vet {

ImageBuffer error_map(const ImageBuffer& render, const ImageBuffer& truth,
                      const ErrorMapConfig& config) {
  if (!render.same_shape(truth)) throw std::invalid_argument("error_map: image shape mismatch");

  ImageBuffer out(render.width, render.height, 1);
  if (config.metric == ErrorMetric::SSIM) {
    const ImageBuffer sim = eval::ssim_map(render, truth);
    for (size_t i = 0; i < sim.data.size(); ++i)
      out.data[i] = std::clamp(1.0 - sim.data[i], 0.0, 1.0);
    return out;
  }

  const int ch = render.channels;
  for (int r = 0; r < render.height; ++r) {
    for (int c = 0; c < render.width; ++c) {
      double acc = 0.0;
      for (int k = 0; k < ch; ++k) {
        const double d = render.at(r, c, k) - truth.at(r, c, k);
        acc += config.metric == ErrorMetric::L1 ? std::abs(d) : d * d;
      }
      out.at(r, c, 0) = acc / double(ch);
    }
  }
  return out;
}

ImageBuffer preprocess_error(const ImageBuffer& error, double focus) {
  ImageBuffer out(error.width, error.height, error.channels);
  for (size_t i = 0; i < error.data.size(); ++i)
    out.data[i] = std::clamp(error.data[i] * (1.0 + focus) - focus, 0.0, 1.0);
  return out;
}

Box3 scene_bbox(const PointCloud& cloud, double inner_fraction) {
  if (inner_fraction <= 0.0 || inner_fraction > 1.0)
    throw std::invalid_argument("scene_bbox: inner_fraction must be in (0,1]");

  std::vector<double> coords[3];
  for (size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud.points[i];
    if (p.is_environment) continue;
    coords[0].push_back(p.position.x);
    coords[1].push_back(p.position.y);
    coords[2].push_back(p.position.z);
  }
  if (coords[0].empty())
    throw std::invalid_argument("scene_bbox: cloud has no non-environment points");

  const double q_lo = (1.0 - inner_fraction) / 2.0;
  const double q_hi = 1.0 - q_lo;
  Box3 box;
  for (int a = 0; a < 3; ++a) {
    auto& v = coords[a];
    std::sort(v.begin(), v.end());
    const auto quantile = [&](double q) {
      const double pos = q * double(v.size() - 1);
      const size_t lo = size_t(std::floor(pos));
      const size_t hi = std::min(lo + 1, v.size() - 1);
      const double frac = pos - double(lo);
      return v[lo] * (1.0 - frac) + v[hi] * frac;
    };
    box.min[a] = quantile(q_lo);
    box.max[a] = quantile(q_hi);
  }

  // 2% expansion, then a floor so degenerate axes still give the grid volume.
  const double floor_extent = std::max(1e-3 * box.diagonal(), 1e-3);
  for (int a = 0; a < 3; ++a) {
    const double len = box.max[a] - box.min[a];
    const double pad = std::max(0.01 * len, 0.5 * std::max(floor_extent - len, 0.0));
    box.min[a] -= pad;
    box.max[a] += pad;
  }
  return box;
}

namespace {

struct RaySegment {
  Vec3 origin;
  Vec3 dir;       // unit length
  double t0 = 0.0;
  double t1 = -1.0;  // t1 <= t0: miss
  int steps = 0;
  double h = 0.0;  // step length, steps * h == t1 - t0
};

RaySegment clip_ray(const ErrorVolume& vol, const Camera& cam, int row, int col,
                    double ray_step) {
  RaySegment seg;
  seg.origin = cam.position();
  const Vec3 dir_cam{(double(col) + 0.5 - cam.cx) / cam.fx,
                     (double(row) + 0.5 - cam.cy) / cam.fy, 1.0};
  seg.dir = (cam.rotation.transposed() * dir_cam).normalized();

  const Box3 box = vol.world_box();
  double t0 = 1e-9, t1 = 1e300;
  for (int a = 0; a < 3; ++a) {
    const double d = seg.dir[a];
    if (std::abs(d) < 1e-15) {
      if (seg.origin[a] < box.min[a] || seg.origin[a] > box.max[a]) return seg;
      continue;
    }
    double ta = (box.min[a] - seg.origin[a]) / d;
    double tb = (box.max[a] - seg.origin[a]) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t1 <= t0) return seg;

  const double max_step = ray_step * vol.voxel_size;
  seg.t0 = t0;
  seg.t1 = t1;
  seg.steps = std::max(1, int(std::ceil((t1 - t0) / max_step)));
  seg.h = (t1 - t0) / double(seg.steps);
  return seg;
}

struct TrilinearSample {
  size_t idx[8];
  double w[8];
};

// Samples on the voxel-center lattice with clamp-to-border (constant
// extension inside the half-voxel margin).
inline TrilinearSample trilinear_at(const ErrorVolume& vol, const Vec3& p) {
  TrilinearSample s;
  double g[3], f[3];
  int i0[3], i1[3];
  const Vec3 rel = (p - vol.origin) / vol.voxel_size;
  const double gc[3] = {rel.x - 0.5, rel.y - 0.5, rel.z - 0.5};
  for (int a = 0; a < 3; ++a) {
    g[a] = std::clamp(gc[a], 0.0, double(vol.dims[a] - 1));
    i0[a] = int(std::floor(g[a]));
    i0[a] = std::min(i0[a], vol.dims[a] - 1);
    i1[a] = std::min(i0[a] + 1, vol.dims[a] - 1);
    f[a] = g[a] - double(i0[a]);
  }
  const double wx[2] = {1.0 - f[0], f[0]};
  const double wy[2] = {1.0 - f[1], f[1]};
  const double wz[2] = {1.0 - f[2], f[2]};
  int k = 0;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        s.idx[k] = vol.index(dx ? i1[0] : i0[0], dy ? i1[1] : i0[1], dz ? i1[2] : i0[2]);
        s.w[k] = wx[dx] * wy[dy] * wz[dz];
        ++k;
      }
  return s;
}

inline double integrate_ray(const ErrorVolume& vol, const RaySegment& seg) {
  double sum = 0.0;
  for (int k = 0; k < seg.steps; ++k) {
    const Vec3 p = seg.origin + seg.dir * (seg.t0 + (double(k) + 0.5) * seg.h);
    const TrilinearSample s = trilinear_at(vol, p);
    double rho = 0.0;
    for (int j = 0; j < 8; ++j) rho += s.w[j] * vol.density[s.idx[j]];
    sum += rho * seg.h;
  }
  return sum;
}

// Raw (unclamped) line integrals for one view.
ImageBuffer project_raw(const ErrorVolume& vol, const Camera& cam, double ray_step,
                        int threads) {
  ImageBuffer img(cam.width, cam.height, 1);
  const int64_t n = int64_t(cam.width) * cam.height;
  parallel_chunks(n, threads, [&](int64_t begin, int64_t end) {
    for (int64_t px = begin; px < end; ++px) {
      const int row = int(px / cam.width);
      const int col = int(px % cam.width);
      const RaySegment seg = clip_ray(vol, cam, row, col, ray_step);
      img.data[size_t(px)] = seg.t1 > seg.t0 ? integrate_ray(vol, seg) : 0.0;
    }
  });
  return img;
}

// Fixed-point accumulator scale for the voxel gradient. Integer adds are
// associative, which keeps the scatter bitwise identical for any thread
// count and pixel order.
constexpr double kFixedScale = 4294967296.0;  // 2^32

void scatter_view_gradient(const ErrorVolume& vol, const Camera& cam, double ray_step,
                           const ImageBuffer& coeff, std::vector<int64_t>& accum, int threads) {
  const int64_t n = int64_t(cam.width) * cam.height;
  const int slots = std::max(1, threads);
  std::vector<std::vector<int64_t>> partial(static_cast<size_t>(slots));
  parallel_chunks_indexed(n, threads, [&](int slot, int64_t begin, int64_t end) {
    auto& grid = partial[size_t(slot)];
    grid.assign(vol.voxel_count(), 0);
    for (int64_t px = begin; px < end; ++px) {
      const double c = coeff.data[size_t(px)];
      if (c == 0.0) continue;
      const int row = int(px / cam.width);
      const int col = int(px % cam.width);
      const RaySegment seg = clip_ray(vol, cam, row, col, ray_step);
      if (!(seg.t1 > seg.t0)) continue;
      const double scale = c * seg.h * kFixedScale;
      for (int k = 0; k < seg.steps; ++k) {
        const Vec3 p = seg.origin + seg.dir * (seg.t0 + (double(k) + 0.5) * seg.h);
        const TrilinearSample s = trilinear_at(vol, p);
        for (int j = 0; j < 8; ++j) grid[s.idx[j]] += std::llround(scale * s.w[j]);
      }
    }
  });
  for (const auto& grid : partial) {
    if (grid.empty()) continue;
    for (size_t i = 0; i < accum.size(); ++i) accum[i] += grid[i];
  }
}

void tv_gradient_into(const ErrorVolume& vol, std::vector<double>& grad, double weight,
                      int threads) {
  // Gather form of the subgradient of sum |V[x+e] - V[x]|; sign(0) = 0.
  const auto sgn = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
  const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
  parallel_chunks(int64_t(vol.voxel_count()), threads, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      const int x = int(i % nx);
      const int y = int((i / nx) % ny);
      const int z = int(i / (int64_t(nx) * ny));
      const double v = vol.density[size_t(i)];
      double g = 0.0;
      if (x > 0) g += sgn(v - vol.density[vol.index(x - 1, y, z)]);
      if (x + 1 < nx) g -= sgn(vol.density[vol.index(x + 1, y, z)] - v);
      if (y > 0) g += sgn(v - vol.density[vol.index(x, y - 1, z)]);
      if (y + 1 < ny) g -= sgn(vol.density[vol.index(x, y + 1, z)] - v);
      if (z > 0) g += sgn(v - vol.density[vol.index(x, y, z - 1)]);
      if (z + 1 < nz) g -= sgn(vol.density[vol.index(x, y, z + 1)] - v);
      grad[size_t(i)] += weight * g;
    }
  });
}

}  // namespace

ImageBuffer forward_project(const ErrorVolume& volume, const Camera& camera, double ray_step,
                            int threads) {
  ImageBuffer img = project_raw(volume, camera, ray_step, threads);
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

double total_variation(const ErrorVolume& vol) {
  double tv = 0.0;
  const int nx = vol.dims[0], ny = vol.dims[1], nz = vol.dims[2];
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        const double v = vol.density[vol.index(x, y, z)];
        if (x + 1 < nx) tv += std::abs(vol.density[vol.index(x + 1, y, z)] - v);
        if (y + 1 < ny) tv += std::abs(vol.density[vol.index(x, y + 1, z)] - v);
        if (z + 1 < nz) tv += std::abs(vol.density[vol.index(x, y, z + 1)] - v);
      }
  return tv;
}

ReconResult reconstruct_volume(const std::vector<ImageBuffer>& error_maps,
                               const std::vector<Camera>& cameras, const Box3& box,
                               const ReconConfig& config, int threads) {
  if (error_maps.size() != cameras.size())
    throw std::invalid_argument("reconstruct_volume: view/camera count mismatch");
  if (error_maps.size() < 2)
    throw std::invalid_argument("reconstruct_volume: need at least 2 views");
  for (int a = 0; a < 3; ++a)
    if (config.dims[size_t(a)] < 2)
      throw std::invalid_argument("reconstruct_volume: grid dims must be >= 2 per axis");

  // Cubic voxels covering the box, grid centered on the box center.
  const Vec3 extent = box.extent();
  double voxel_size = 0.0;
  for (int a = 0; a < 3; ++a)
    voxel_size = std::max(voxel_size, extent[a] / double(config.dims[size_t(a)]));
  if (!(voxel_size > 0.0)) throw std::invalid_argument("reconstruct_volume: degenerate box");
  const Vec3 center = box.center();
  const Vec3 origin =
      center - Vec3(config.dims[0], config.dims[1], config.dims[2]) * (0.5 * voxel_size);

  ReconResult result;
  result.volume = ErrorVolume(origin, voxel_size, config.dims);

  bool any_error = false;
  for (const auto& m : error_maps)
    for (double v : m.data)
      if (v > 0.0) {
        any_error = true;
        break;
      }
  if (!any_error) {
    result.nothing_to_reconstruct = true;
    result.data_objective.push_back(0.0);
    return result;
  }

  ErrorVolume& vol = result.volume;
  const size_t nvox = vol.voxel_count();
  const size_t nviews = error_maps.size();

  // Raw integrals per view for the current iterate; refreshed on acceptance.
  std::vector<ImageBuffer> raw(nviews);
  const auto project_all = [&](const ErrorVolume& v, std::vector<ImageBuffer>& out) {
    out.resize(nviews);
    for (size_t i = 0; i < nviews; ++i)
      out[i] = project_raw(v, cameras[i], config.ray_step, threads);
  };
  const auto data_term = [&](const std::vector<ImageBuffer>& raws) {
    double obj = 0.0;
    for (size_t i = 0; i < nviews; ++i) {
      const auto& truth = error_maps[i];
      for (size_t px = 0; px < truth.data.size(); ++px) {
        const double r = std::clamp(raws[i].data[px], 0.0, 1.0) - truth.data[px];
        obj += r * r;
      }
    }
    return obj;
  };

  project_all(vol, raw);
  double data_obj = data_term(raw);
  double full_obj = data_obj + config.tv_weight * total_variation(vol);
  result.data_objective.push_back(data_obj);

  const double step0 = config.step_size > 0.0 ? config.step_size : 1.0 / double(nviews);
  double step = step0;

  std::vector<int64_t> accum(nvox);
  std::vector<double> grad(nvox);
  ErrorVolume trial = vol;
  std::vector<ImageBuffer> trial_raw;

  for (int it = 0; it < config.iterations; ++it) {
    std::fill(accum.begin(), accum.end(), 0);
    for (size_t i = 0; i < nviews; ++i) {
      // d/dS of (clamp(S) - I')^2, zero where the response is saturated.
      ImageBuffer coeff(raw[i].width, raw[i].height, 1);
      for (size_t px = 0; px < coeff.data.size(); ++px) {
        const double s = raw[i].data[px];
        coeff.data[px] =
            s > 1.0 ? 0.0 : 2.0 * (std::clamp(s, 0.0, 1.0) - error_maps[i].data[px]);
      }
      scatter_view_gradient(vol, cameras[i], config.ray_step, coeff, accum, threads);
    }
    for (size_t i = 0; i < nvox; ++i) grad[i] = double(accum[i]) / kFixedScale;
    tv_gradient_into(vol, grad, config.tv_weight, threads);

    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      for (size_t i = 0; i < nvox; ++i)
        trial.density[i] = std::max(0.0, vol.density[i] - step * grad[i]);
      project_all(trial, trial_raw);
      const double trial_data = data_term(trial_raw);
      const double trial_full = trial_data + config.tv_weight * total_variation(trial);
      if (trial_full <= full_obj) {
        vol.density.swap(trial.density);
        raw.swap(trial_raw);
        data_obj = trial_data;
        full_obj = trial_full;
        step = std::min(step * 1.25, step0);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    result.data_objective.push_back(data_obj);
    if (!accepted) break;  // no descent direction at float resolution
  }
  return result;
}

}  // namespace pvet::vet
