#include "pointvet/io/colmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pointvet/core/errors.hpp"

namespace pvet::io {

namespace {

[[noreturn]] void fail(const std::string& file, int line, const std::string& what) {
  throw DataError(file + " line " + std::to_string(line) + ": " + what);
}

struct LineReader {
  std::ifstream in;
  std::string file;
  int line_no = 0;

  explicit LineReader(const std::string& path) : in(path), file(path) {
    if (!in) throw DataError(path + ": cannot open");
  }

  // Next non-comment line; returns false at EOF. skip_blank keeps COLMAP's
  // possibly-empty POINTS2D lines visible when false.
  bool next(std::string& out, bool skip_blank = true) {
    while (std::getline(in, out)) {
      ++line_no;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      const size_t first = out.find_first_not_of(" \t");
      if (first == std::string::npos) {
        if (skip_blank) continue;
        return true;
      }
      if (out[first] == '#') continue;
      return true;
    }
    return false;
  }
};

Mat3 rotation_from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  return Mat3::from_rows(
      {1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
      {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
      {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)});
}

void read_cameras(const std::string& path, std::map<int, Camera>& cameras) {
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    std::istringstream ls(line);
    int id = 0;
    std::string model;
    long width = 0, height = 0;
    if (!(ls >> id >> model >> width >> height) || width <= 0 || height <= 0)
      fail(path, reader.line_no, "malformed camera line");
    Camera cam;
    cam.width = int(width);
    cam.height = int(height);
    if (model == "SIMPLE_PINHOLE") {
      double f, cx, cy;
      if (!(ls >> f >> cx >> cy)) fail(path, reader.line_no, "malformed SIMPLE_PINHOLE params");
      cam.fx = cam.fy = f;
      cam.cx = cx;
      cam.cy = cy;
    } else if (model == "PINHOLE") {
      double fx, fy, cx, cy;
      if (!(ls >> fx >> fy >> cx >> cy)) fail(path, reader.line_no, "malformed PINHOLE params");
      cam.fx = fx;
      cam.fy = fy;
      cam.cx = cx;
      cam.cy = cy;
    } else {
      fail(path, reader.line_no, "unsupported camera model '" + model + "'");
    }
    cameras[id] = cam;
  }
}

void read_images(const std::string& path, const std::map<int, Camera>& cameras,
                 std::vector<ColmapImage>& images) {
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    std::istringstream ls(line);
    ColmapImage img;
    double qw, qx, qy, qz;
    if (!(ls >> img.image_id >> qw >> qx >> qy >> qz >> img.translation.x >>
          img.translation.y >> img.translation.z >> img.camera_id >> img.name))
      fail(path, reader.line_no, "malformed image line");
    if (!(qw * qw + qx * qx + qy * qy + qz * qz > 0.0))
      fail(path, reader.line_no, "zero quaternion");
    if (cameras.find(img.camera_id) == cameras.end())
      fail(path, reader.line_no, "unknown camera id " + std::to_string(img.camera_id));
    img.rotation = rotation_from_quaternion(qw, qx, qy, qz);
    images.push_back(img);
    // Companion POINTS2D line (may be empty).
    std::string pts;
    reader.next(pts, /*skip_blank=*/false);
  }
  std::sort(images.begin(), images.end(),
            [](const ColmapImage& a, const ColmapImage& b) { return a.image_id < b.image_id; });
}

void read_points(const std::string& path, PointCloud& cloud) {
  LineReader reader(path);
  std::string line;
  while (reader.next(line)) {
    std::istringstream ls(line);
    long id = 0;
    double x, y, z;
    int r, g, b;
    if (!(ls >> id >> x >> y >> z >> r >> g >> b))
      fail(path, reader.line_no, "malformed point line");
    Point p;
    p.position = {x, y, z};
    p.color = Vec3{double(r), double(g), double(b)} / 255.0;
    p.alpha_raw = 0.0;
    cloud.append(p, 0);
  }
}

}  // namespace

Camera ColmapModel::view_camera(const ColmapImage& img) const {
  Camera cam = cameras.at(img.camera_id);
  cam.rotation = img.rotation;
  cam.translation = img.translation;
  return cam;
}

ColmapModel read_colmap(const std::string& dir) {
  ColmapModel model;
  read_cameras(dir + "/cameras.txt", model.cameras);
  read_images(dir + "/images.txt", model.cameras, model.images);
  read_points(dir + "/points3D.txt", model.points);
  return model;
}

}  // namespace pvet::io
