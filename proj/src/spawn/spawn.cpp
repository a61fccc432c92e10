#include "pointvet/spawn/spawn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pointvet/core/rng.hpp"
#include "pointvet/parallel.hpp"

namespace pvet::spawn {

namespace {

Vec3 view_average_color(const Vec3& pos, const std::vector<Camera>& cameras,
                        const std::vector<ImageBuffer>& images) {
  Vec3 acc;
  int hits = 0;
  for (size_t i = 0; i < cameras.size(); ++i) {
    const auto proj = project(cameras[i], pos);
    if (!proj) continue;
    const ImageBuffer& img = images[i];
    const int col = std::clamp(int(proj->u), 0, img.width - 1);
    const int row = std::clamp(int(proj->v), 0, img.height - 1);
    if (img.channels >= 3)
      acc += Vec3{img.at(row, col, 0), img.at(row, col, 1), img.at(row, col, 2)};
    else
      acc += Vec3(img.at(row, col, 0));
    ++hits;
  }
  return hits > 0 ? acc / double(hits) : Vec3(0.5);
}

}  // namespace

std::vector<Point> spawn_from_volume(const ErrorVolume& volume, const SpawnConfig& config,
                                     const std::vector<Camera>& train_cameras,
                                     const std::vector<ImageBuffer>& train_images,
                                     int threads) {
  if (config.p_max < 1) throw std::invalid_argument("spawn_from_volume: p_max must be >= 1");
  if (train_cameras.size() != train_images.size())
    throw std::invalid_argument("spawn_from_volume: camera/image count mismatch");

  const size_t nvox = volume.voxel_count();
  double max_density = 0.0;
  for (double d : volume.density) max_density = std::max(max_density, d);
  if (!(max_density > 0.0)) return {};

  std::vector<int> counts(nvox);
  std::vector<size_t> offsets(nvox + 1, 0);
  for (size_t i = 0; i < nvox; ++i) {
    const double e = std::max(0.0, volume.density[i]) / max_density;
    counts[i] = int(std::floor(e * double(config.p_max)));
    offsets[i + 1] = offsets[i] + size_t(counts[i]);
  }

  std::vector<Point> out(offsets[nvox]);
  const bool view_avg = config.color_init == ColorInit::ViewAverage && !train_cameras.empty();
  const int nx = volume.dims[0], ny = volume.dims[1];

  parallel_chunks(int64_t(nvox), threads, [&](int64_t begin, int64_t end) {
    for (int64_t v = begin; v < end; ++v) {
      const int n = counts[size_t(v)];
      if (n == 0) continue;
      const int x = int(v % nx);
      const int y = int((v / nx) % ny);
      const int z = int(v / (int64_t(nx) * ny));
      const Vec3 lo = volume.voxel_min(x, y, z);
      const Vec3 color = view_avg ? view_average_color(volume.voxel_center(x, y, z),
                                                       train_cameras, train_images)
                                  : Vec3(0.5);
      std::mt19937_64 rng(substream_seed(config.seed, uint64_t(v)));
      for (int k = 0; k < n; ++k) {
        Point& p = out[offsets[size_t(v)] + size_t(k)];
        p.position = lo + Vec3{uniform01(rng), uniform01(rng), uniform01(rng)} * volume.voxel_size;
        p.color = color;
        p.alpha_raw = 0.0;
        p.is_environment = false;
      }
    }
  });
  return out;
}

std::vector<Vec3> fibonacci_layer(int n, const Vec3& center, double radius) {
  if (n < 1) throw std::invalid_argument("fibonacci_layer: n must be >= 1");
  if (!(radius > 0.0)) throw std::invalid_argument("fibonacci_layer: radius must be positive");
  constexpr double golden = 1.6180339887498948482;
  const double dphi = 2.0 * M_PI * (1.0 - 1.0 / golden);
  std::vector<Vec3> pts(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / double(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = dphi * double(i);
    pts[size_t(i)] = center + Vec3{r * std::cos(phi), r * std::sin(phi), z} * radius;
  }
  return pts;
}

std::vector<Point> build_environment(const Box3& scene_box, const EnvConfig& config) {
  if (config.layers < 0) throw std::invalid_argument("build_environment: negative layer count");
  if (int(config.radii.size()) < config.layers)
    throw std::invalid_argument("build_environment: fewer radii than layers");
  for (size_t i = 0; i < config.radii.size(); ++i) {
    if (config.radii[i] <= 1.0)
      throw std::invalid_argument("build_environment: radii must exceed 1");
    if (i > 0 && config.radii[i] <= config.radii[i - 1])
      throw std::invalid_argument("build_environment: radii must be strictly increasing");
  }

  const Vec3 center = scene_box.center();
  const double bound_radius = 0.5 * scene_box.diagonal();
  std::vector<Point> out;
  out.reserve(size_t(config.layers) * size_t(config.points_per_layer));
  for (int layer = 0; layer < config.layers; ++layer) {
    const auto positions = fibonacci_layer(config.points_per_layer, center,
                                           config.radii[size_t(layer)] * bound_radius);
    for (const Vec3& pos : positions) {
      Point p;
      p.position = pos;
      p.color = Vec3(0.5);
      p.alpha_raw = 0.0;
      p.is_environment = true;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace pvet::spawn
