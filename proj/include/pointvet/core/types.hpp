#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pointvet/core/vec.hpp"

namespace pvet {

// One scene point. Color is kept in [0,1]; the raw opacity is unbounded and
// mapped through a sigmoid at render time (see alpha_of).
struct Point {
  Vec3 position;
  Vec3 color{0.5, 0.5, 0.5};
  double alpha_raw = 0.0;
  bool is_environment = false;
};

// The optimizable scene representation. generation[i] records the spawn round
// that created point i (0 = initial cloud, including environment layers).
struct PointCloud {
  std::vector<Point> points;
  std::vector<int32_t> generation;

  PointCloud() = default;
  explicit PointCloud(std::vector<Point> pts)
      : points(std::move(pts)), generation(points.size(), 0) {}

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void append(const Point& p, int32_t gen) {
    points.push_back(p);
    generation.push_back(gen);
  }
};

// Row-major interleaved float image, samples addressed as (row, col, channel).
struct ImageBuffer {
  int width = 0, height = 0, channels = 0;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), data(size_t(w) * h * c, fill) {}

  double& at(int row, int col, int ch) {
    return data[(size_t(row) * width + col) * channels + ch];
  }
  double at(int row, int col, int ch) const {
    return data[(size_t(row) * width + col) * channels + ch];
  }
  size_t sample_count() const { return data.size(); }
  bool same_shape(const ImageBuffer& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

// Axis-aligned voxel grid of non-negative error densities, cubic voxels,
// density stored x-fastest: index = x + dims[0]*(y + dims[1]*z).
struct ErrorVolume {
  Vec3 origin;
  double voxel_size = 1.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<double> density;

  ErrorVolume() = default;
  ErrorVolume(const Vec3& origin_, double voxel_size_, std::array<int, 3> dims_)
      : origin(origin_),
        voxel_size(voxel_size_),
        dims(dims_),
        density(size_t(dims_[0]) * dims_[1] * dims_[2], 0.0) {}

  size_t voxel_count() const { return size_t(dims[0]) * dims[1] * dims[2]; }
  size_t index(int x, int y, int z) const {
    return size_t(x) + size_t(dims[0]) * (size_t(y) + size_t(dims[1]) * size_t(z));
  }
  Vec3 voxel_min(int x, int y, int z) const {
    return origin + Vec3(x, y, z) * voxel_size;
  }
  Vec3 voxel_center(int x, int y, int z) const {
    return origin + Vec3(x + 0.5, y + 0.5, z + 0.5) * voxel_size;
  }
  Box3 world_box() const {
    return {origin, origin + Vec3(dims[0], dims[1], dims[2]) * voxel_size};
  }
};

}  // namespace pvet
