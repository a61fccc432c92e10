#pragma once

#include <cstdint>
#include <vector>

#include "pointvet/core/camera.hpp"
#include "pointvet/core/types.hpp"

namespace pvet::eval {

enum class Primitive { Cube, Sphere, Plane, Branches };

struct SynthSpec {
  std::vector<Primitive> primitives{Primitive::Sphere};
  int image_count = 16;
  int width = 128;
  int height = 128;
  double spacing = 0.02;  // target surface sample spacing, world units
  std::vector<Box3> ablations;
  int outlier_count = 0;
  uint64_t seed = 1;
  Vec3 background{0.0, 0.0, 0.0};
  double camera_distance = 3.0;
  double vertical_fov_deg = 50.0;
};

// Ground truth plus the degraded training input: GT points carry alpha_raw=1
// and render effectively opaque at steepness 50; the degraded cloud drops
// every GT point inside an ablation box and appends uniform random outliers
// (random colors) inside the GT bounding box. outlier_positions records the
// exact injected positions so later stages can count survivors.
struct SyntheticScene {
  PointCloud ground_truth;
  PointCloud degraded;
  std::vector<Camera> cameras;
  std::vector<ImageBuffer> images;  // GT render per camera
  std::vector<Box3> ablations;
  std::vector<Vec3> outlier_positions;
  double spacing = 0.0;
};

// Deterministic in (spec.seed, threads-independent). Cameras sit on a ring of
// radius camera_distance with alternating elevation, all aimed at the origin.
// Requires >= 8 cameras.
SyntheticScene synth_scene(const SynthSpec& spec, int threads = 1);

}  // namespace pvet::eval
