#pragma once

#include <cstdint>
#include <vector>

#include "pointvet/core/camera.hpp"
#include "pointvet/core/types.hpp"

namespace pvet::spawn {

enum class ColorInit { Midgray, ViewAverage };

struct SpawnConfig {
  int p_max = 10;
  uint64_t seed = 0;
  ColorInit color_init = ColorInit::ViewAverage;
};

struct EnvConfig {
  int layers = 4;
  int points_per_layer = 2000;
  std::vector<double> radii{2.0, 4.0, 8.0, 16.0};  // multiples of the bbox bounding-sphere radius
};

// Error volume to candidate points. Densities are normalized by the grid
// maximum, each voxel emits floor(e * p_max) points uniform in its cube.
// Per-voxel RNG substreams keyed on (seed, voxel index) make the result
// independent of iteration order. View-average color init samples the
// ground-truth images at the voxel center's projection; voxels no training
// view sees fall back to midgray. alpha_raw starts at 0 (alpha 0.5 at
// steepness 1).
std::vector<Point> spawn_from_volume(const ErrorVolume& volume, const SpawnConfig& config,
                                     const std::vector<Camera>& train_cameras,
                                     const std::vector<ImageBuffer>& train_images,
                                     int threads = 1);

// Spherical Fibonacci lattice: z_i = 1 - (2i+1)/n, phi_i = 2 pi i (1 - 1/phi).
std::vector<Vec3> fibonacci_layer(int n, const Vec3& center, double radius);

// Nested environment spheres around the scene box, radius = multiplier times
// the box's bounding-sphere radius. Midgray, alpha_raw 0, is_environment set.
std::vector<Point> build_environment(const Box3& scene_box, const EnvConfig& config);

}  // namespace pvet::spawn
