#pragma once

#include <optional>

#include "pointvet/core/vec.hpp"

namespace pvet {

// Pinhole camera: world-to-camera rigid transform plus intrinsics in pixels.
// No distortion model; inputs are assumed undistorted.
struct Camera {
  Mat3 rotation = Mat3::identity();  // world-to-camera
  Vec3 translation;
  double fx = 1.0, fy = 1.0;
  double cx = 0.0, cy = 0.0;
  int width = 1, height = 1;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && width >= 1 && height >= 1 &&
           rotation.orthonormality_error() < 1e-6;
  }

  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 position() const { return -(rotation.transposed() * translation); }
};

struct Projection {
  double u = 0.0;  // pixel x
  double v = 0.0;  // pixel y
  double depth = 0.0;
};

// Projects a world point. Empty when the point is behind the camera or the
// projection falls outside [0,width) x [0,height).
inline std::optional<Projection> project(const Camera& cam, const Vec3& position) {
  const Vec3 pc = cam.to_camera(position);
  if (!(pc.z > 0.0)) return std::nullopt;
  const double u = cam.fx * pc.x / pc.z + cam.cx;
  const double v = cam.fy * pc.y / pc.z + cam.cy;
  if (!(u >= 0.0 && u < double(cam.width) && v >= 0.0 && v < double(cam.height)))
    return std::nullopt;
  return Projection{u, v, pc.z};
}

// Camera at `eye` looking at `target`, image v axis pointing along world -up.
inline Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
                      double cx, double cy, int width, int height) {
  const Vec3 forward = (target - eye).normalized();
  const Vec3 right = forward.cross(up).normalized();
  const Vec3 down = forward.cross(right);
  Camera cam;
  cam.rotation = Mat3::from_rows(right, down, forward);
  cam.translation = -(cam.rotation * eye);
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace pvet
