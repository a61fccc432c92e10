#pragma once

#include <map>
#include <string>
#include <vector>

#include "pointvet/core/camera.hpp"
#include "pointvet/core/types.hpp"

namespace pvet::io {

struct ColmapImage {
  int image_id = 0;
  int camera_id = 0;
  Mat3 rotation;     // world-to-camera
  Vec3 translation;
  std::string name;
};

struct ColmapModel {
  std::map<int, Camera> cameras;  // intrinsics only, identity pose
  std::vector<ColmapImage> images;  // sorted by image_id
  PointCloud points;

  // Full camera for one registered image.
  Camera view_camera(const ColmapImage& img) const;
};

// Reads cameras.txt / images.txt / points3D.txt (COLMAP text model) from a
// directory. SIMPLE_PINHOLE and PINHOLE only; errors carry file + line.
ColmapModel read_colmap(const std::string& dir);

}  // namespace pvet::io
