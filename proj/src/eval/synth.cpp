#include "pointvet/eval/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "pointvet/core/rng.hpp"
#include "pointvet/raster/raster.hpp"

namespace pvet::eval {

namespace {

// Smooth per-primitive surface texture; keeps colors off the clamp bounds so
// color gradients stay informative everywhere.
Vec3 pattern_color(const Vec3& p, int phase) {
  const double q = double(phase);
  return Vec3{0.5 + 0.4 * std::sin(4.0 * p.x + 1.3 * q + 0.5),
              0.5 + 0.4 * std::sin(5.0 * p.y + 0.7 * q + 1.9),
              0.5 + 0.4 * std::sin(6.0 * p.z + 1.1 * q + 3.1)};
}

void emit(PointCloud& cloud, const Vec3& pos, int phase) {
  Point p;
  p.position = pos;
  p.color = pattern_color(pos, phase);
  p.alpha_raw = 1.0;
  cloud.append(p, 0);
}

// Unit sphere at the origin, area-uniform.
void sample_sphere(PointCloud& cloud, double spacing, std::mt19937_64& rng, int phase) {
  const int64_t n = std::llround(4.0 * M_PI / (spacing * spacing));
  for (int64_t i = 0; i < n; ++i) {
    const double z = uniform_in(rng, -1.0, 1.0);
    const double phi = uniform_in(rng, 0.0, 2.0 * M_PI);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    emit(cloud, {r * std::cos(phi), r * std::sin(phi), z}, phase);
  }
}

// Surface of the cube [-1,1]^3.
void sample_cube(PointCloud& cloud, double spacing, std::mt19937_64& rng, int phase) {
  const int64_t per_face = std::llround(4.0 / (spacing * spacing));
  for (int face = 0; face < 6; ++face) {
    const int axis = face / 2;
    const double fixed = face % 2 == 0 ? -1.0 : 1.0;
    for (int64_t i = 0; i < per_face; ++i) {
      const double a = uniform_in(rng, -1.0, 1.0);
      const double b = uniform_in(rng, -1.0, 1.0);
      Vec3 pos;
      pos[axis] = fixed;
      pos[(axis + 1) % 3] = a;
      pos[(axis + 2) % 3] = b;
      emit(cloud, pos, phase);
    }
  }
}

// Ground square [-2,2]^2 at z = -1.1.
void sample_plane(PointCloud& cloud, double spacing, std::mt19937_64& rng, int phase) {
  const int64_t n = std::llround(16.0 / (spacing * spacing));
  for (int64_t i = 0; i < n; ++i)
    emit(cloud, {uniform_in(rng, -2.0, 2.0), uniform_in(rng, -2.0, 2.0), -1.1}, phase);
}

// Thin segments (about a pixel across at desk-scale resolutions).
void sample_branches(PointCloud& cloud, double spacing, std::mt19937_64& rng, int phase) {
  const int segments = 12;
  for (int s = 0; s < segments; ++s) {
    const Vec3 start{uniform_in(rng, -0.8, 0.8), uniform_in(rng, -0.8, 0.8),
                     uniform_in(rng, -0.8, 0.8)};
    Vec3 dir{uniform_in(rng, -1.0, 1.0), uniform_in(rng, -1.0, 1.0), uniform_in(rng, -1.0, 1.0)};
    if (dir.norm() < 1e-6) dir = Vec3{0.0, 0.0, 1.0};
    dir = dir.normalized();
    const double length = uniform_in(rng, 0.6, 1.2);
    const Vec3 helper = std::abs(dir.z) < 0.9 ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
    const Vec3 u = dir.cross(helper).normalized();
    const Vec3 v = dir.cross(u);
    const int64_t steps = std::max<int64_t>(1, std::llround(length / spacing));
    for (int64_t i = 0; i < steps; ++i) {
      for (int k = 0; k < 3; ++k) {
        const double ang = uniform_in(rng, 0.0, 2.0 * M_PI);
        const double rad = spacing * std::sqrt(uniform01(rng));
        const Vec3 pos = start + dir * (double(i) * spacing) +
                         u * (rad * std::cos(ang)) + v * (rad * std::sin(ang));
        emit(cloud, pos, phase);
      }
    }
  }
}

std::vector<Camera> camera_ring(const SynthSpec& spec) {
  const double fy = 0.5 * double(spec.height) / std::tan(0.5 * spec.vertical_fov_deg * M_PI / 180.0);
  static constexpr double elevations[3] = {0.25, 0.55, -0.15};
  std::vector<Camera> cams;
  cams.reserve(size_t(spec.image_count));
  for (int i = 0; i < spec.image_count; ++i) {
    const double az = 2.0 * M_PI * double(i) / double(spec.image_count);
    const double el = elevations[i % 3];
    const Vec3 eye = Vec3{std::cos(az) * std::cos(el), std::sin(az) * std::cos(el), std::sin(el)} *
                     spec.camera_distance;
    cams.push_back(look_at(eye, Vec3{0, 0, 0}, Vec3{0, 0, 1}, fy, fy, 0.5 * spec.width,
                           0.5 * spec.height, spec.width, spec.height));
  }
  return cams;
}

}  // namespace

SyntheticScene synth_scene(const SynthSpec& spec, int threads) {
  if (spec.image_count < 8) throw std::invalid_argument("synth_scene: need at least 8 cameras");
  if (!(spec.spacing > 0.0)) throw std::invalid_argument("synth_scene: spacing must be positive");
  if (spec.outlier_count < 0)
    throw std::invalid_argument("synth_scene: negative outlier count");

  SyntheticScene scene;
  scene.spacing = spec.spacing;
  scene.ablations = spec.ablations;

  for (size_t i = 0; i < spec.primitives.size(); ++i) {
    std::mt19937_64 rng(substream_seed(spec.seed, uint64_t(i)));
    const int phase = int(i);
    switch (spec.primitives[i]) {
      case Primitive::Sphere: sample_sphere(scene.ground_truth, spec.spacing, rng, phase); break;
      case Primitive::Cube: sample_cube(scene.ground_truth, spec.spacing, rng, phase); break;
      case Primitive::Plane: sample_plane(scene.ground_truth, spec.spacing, rng, phase); break;
      case Primitive::Branches:
        sample_branches(scene.ground_truth, spec.spacing, rng, phase);
        break;
    }
  }
  if (scene.ground_truth.empty()) throw std::invalid_argument("synth_scene: empty primitive set");

  scene.cameras = camera_ring(spec);
  scene.images.reserve(scene.cameras.size());
  for (const Camera& cam : scene.cameras) {
    const auto frags = raster::collect_fragments(scene.ground_truth, cam, threads);
    scene.images.push_back(
        raster::render_blend(scene.ground_truth, cam, frags, 50.0, spec.background, threads));
  }

  for (const Box3& box : spec.ablations) {
    bool any = false;
    for (const Point& p : scene.ground_truth.points)
      if (box.contains(p.position)) {
        any = true;
        break;
      }
    if (!any) throw std::invalid_argument("synth_scene: ablation box misses the cloud");
  }

  for (const Point& p : scene.ground_truth.points) {
    bool ablated = false;
    for (const Box3& box : spec.ablations)
      if (box.contains(p.position)) {
        ablated = true;
        break;
      }
    if (!ablated) scene.degraded.append(p, 0);
  }

  if (spec.outlier_count > 0) {
    Box3 bounds = Box3::empty();
    for (const Point& p : scene.ground_truth.points) bounds.extend(p.position);
    std::mt19937_64 rng(substream_seed(spec.seed, 0xA11EDull));
    scene.outlier_positions.reserve(size_t(spec.outlier_count));
    for (int i = 0; i < spec.outlier_count; ++i) {
      Point p;
      p.position = Vec3{uniform_in(rng, bounds.min.x, bounds.max.x),
                        uniform_in(rng, bounds.min.y, bounds.max.y),
                        uniform_in(rng, bounds.min.z, bounds.max.z)};
      p.color = Vec3{uniform_in(rng, 0.05, 0.95), uniform_in(rng, 0.05, 0.95),
                     uniform_in(rng, 0.05, 0.95)};
      p.alpha_raw = 1.0;
      scene.degraded.append(p, 0);
      scene.outlier_positions.push_back(p.position);
    }
  }
  return scene;
}

}  // namespace pvet::eval
