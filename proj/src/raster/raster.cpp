#include "pointvet/raster/raster.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "pointvet/core/opacity.hpp"
#include "pointvet/parallel.hpp"

namespace pvet::raster {

namespace {

struct ProjectedPoint {
  int64_t pixel = -1;  // -1: not visible
  double depth = 0.0;
};

std::vector<ProjectedPoint> project_all(const PointCloud& cloud, const Camera& camera,
                                        int threads) {
  std::vector<ProjectedPoint> out(cloud.size());
  parallel_chunks(int64_t(cloud.size()), threads, [&](int64_t begin, int64_t end) {
    for (int64_t i = begin; i < end; ++i) {
      const auto proj = project(camera, cloud.points[size_t(i)].position);
      if (!proj) continue;
      const int col = int(std::floor(proj->u));
      const int row = int(std::floor(proj->v));
      out[size_t(i)].pixel = int64_t(row) * camera.width + col;
      out[size_t(i)].depth = proj->depth;
    }
  });
  return out;
}

}  // namespace

FragmentBuffer collect_fragments(const PointCloud& cloud, const Camera& camera, int threads) {
  FragmentBuffer buf;
  buf.width = camera.width;
  buf.height = camera.height;
  const size_t pixel_count = size_t(camera.width) * camera.height;
  buf.offsets.assign(pixel_count + 1, 0);

  const auto projected = project_all(cloud, camera, threads);

  // Count pass.
  for (const auto& p : projected)
    if (p.pixel >= 0) ++buf.offsets[size_t(p.pixel) + 1];
  for (size_t i = 1; i <= pixel_count; ++i) buf.offsets[i] += buf.offsets[i - 1];

  // Fill pass, in point-index order; the per-pixel sort below canonicalizes.
  buf.fragments.resize(buf.offsets[pixel_count]);
  std::vector<uint32_t> cursor(buf.offsets.begin(), buf.offsets.end() - 1);
  for (size_t i = 0; i < projected.size(); ++i) {
    const auto& p = projected[i];
    if (p.pixel < 0) continue;
    buf.fragments[cursor[size_t(p.pixel)]++] = Fragment{uint32_t(i), p.depth};
  }

  parallel_chunks(int64_t(pixel_count), threads, [&](int64_t begin, int64_t end) {
    for (int64_t px = begin; px < end; ++px) {
      std::sort(buf.fragments.begin() + buf.offsets[size_t(px)],
                buf.fragments.begin() + buf.offsets[size_t(px) + 1],
                [](const Fragment& a, const Fragment& b) {
                  if (a.depth != b.depth) return a.depth < b.depth;
                  return a.point_index < b.point_index;
                });
    }
  });
  return buf;
}

ImageBuffer render_blend(const PointCloud& cloud, const Camera& camera,
                         const FragmentBuffer& fragments, double steepness,
                         const Vec3& background, int threads) {
  ImageBuffer img(camera.width, camera.height, 3);
  const size_t pixel_count = size_t(camera.width) * camera.height;
  parallel_chunks(int64_t(pixel_count), threads, [&](int64_t begin, int64_t end) {
    for (int64_t px = begin; px < end; ++px) {
      double transmittance = 1.0;
      Vec3 color;
      for (uint32_t f = fragments.offsets[size_t(px)]; f < fragments.offsets[size_t(px) + 1];
           ++f) {
        const Point& pt = cloud.points[fragments.fragments[f].point_index];
        const double a = alpha_of(pt.alpha_raw, steepness);
        color += transmittance * a * pt.color;
        transmittance *= 1.0 - a;
        if (transmittance == 0.0) break;
      }
      color += transmittance * background;
      const size_t base = size_t(px) * 3;
      img.data[base + 0] = color.x;
      img.data[base + 1] = color.y;
      img.data[base + 2] = color.z;
    }
  });
  return img;
}

ImageBuffer render_opaque(const PointCloud& cloud, const Camera& camera,
                          const FragmentBuffer& fragments, double steepness,
                          const Vec3& background, int threads) {
  ImageBuffer img(camera.width, camera.height, 3);
  const size_t pixel_count = size_t(camera.width) * camera.height;
  parallel_chunks(int64_t(pixel_count), threads, [&](int64_t begin, int64_t end) {
    for (int64_t px = begin; px < end; ++px) {
      Vec3 color = background;
      for (uint32_t f = fragments.offsets[size_t(px)]; f < fragments.offsets[size_t(px) + 1];
           ++f) {
        const Point& pt = cloud.points[fragments.fragments[f].point_index];
        if (alpha_of(pt.alpha_raw, steepness) >= 0.5) {
          color = pt.color;  // lists are depth sorted, first qualifying wins
          break;
        }
      }
      const size_t base = size_t(px) * 3;
      img.data[base + 0] = color.x;
      img.data[base + 1] = color.y;
      img.data[base + 2] = color.z;
    }
  });
  return img;
}

BlendGradients backward_blend(const PointCloud& cloud, const Camera& camera,
                              const FragmentBuffer& fragments, double steepness,
                              const ImageBuffer& dloss_dpixel, const Vec3& background,
                              int threads) {
  if (dloss_dpixel.width != camera.width || dloss_dpixel.height != camera.height ||
      dloss_dpixel.channels != 3)
    throw std::invalid_argument("backward_blend: dLoss/dPixel shape mismatch");

  BlendGradients grads;
  grads.d_color.assign(cloud.size(), Vec3{});
  grads.d_alpha_raw.assign(cloud.size(), 0.0);

  const size_t pixel_count = size_t(camera.width) * camera.height;
  // One-pixel points: each point owns at most one fragment per view, so the
  // per-point writes below are disjoint across pixels and the result does not
  // depend on the pixel->thread partition.
  parallel_chunks(int64_t(pixel_count), threads, [&](int64_t begin, int64_t end) {
    std::vector<double> alphas;
    std::vector<Vec3> behind;  // behind[k] = composite of fragments k.. over background
    for (int64_t px = begin; px < end; ++px) {
      const uint32_t fbegin = fragments.offsets[size_t(px)];
      const uint32_t fend = fragments.offsets[size_t(px) + 1];
      const uint32_t n = fend - fbegin;
      if (n == 0) continue;

      const size_t base = size_t(px) * 3;
      const Vec3 w{dloss_dpixel.data[base + 0], dloss_dpixel.data[base + 1],
                   dloss_dpixel.data[base + 2]};

      alphas.resize(n);
      behind.resize(n + 1);
      behind[n] = background;
      for (uint32_t k = n; k-- > 0;) {
        const Point& pt = cloud.points[fragments.fragments[fbegin + k].point_index];
        alphas[k] = alpha_of(pt.alpha_raw, steepness);
        behind[k] = alphas[k] * pt.color + (1.0 - alphas[k]) * behind[k + 1];
      }

      double transmittance = 1.0;
      for (uint32_t k = 0; k < n; ++k) {
        const uint32_t idx = fragments.fragments[fbegin + k].point_index;
        const Point& pt = cloud.points[idx];
        const double a = alphas[k];
        // dC/dc_k = T_k * a_k,  dC/da_k = T_k * (c_k - behind_{k+1})
        grads.d_color[idx] += (transmittance * a) * w;
        const Vec3 dc_da = transmittance * (pt.color - behind[k + 1]);
        const double dl_da = w.dot(dc_da);
        grads.d_alpha_raw[idx] += dl_da * steepness * a * (1.0 - a);
        transmittance *= 1.0 - a;
      }
    }
  });
  return grads;
}

}  // namespace pvet::raster
