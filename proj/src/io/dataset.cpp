#include "pointvet/io/dataset.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pointvet/core/errors.hpp"
#include "pointvet/io/image.hpp"

namespace pvet::io {

namespace {

nlohmann::json camera_to_json(const Camera& cam) {
  nlohmann::json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["rotation"] = std::vector<double>(cam.rotation.m, cam.rotation.m + 9);
  j["translation"] = {cam.translation.x, cam.translation.y, cam.translation.z};
  return j;
}

Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  const auto rot = j.at("rotation");
  const auto tr = j.at("translation");
  if (rot.size() != 9 || tr.size() != 3)
    throw DataError("manifest camera: rotation needs 9 entries, translation 3");
  for (int i = 0; i < 9; ++i) cam.rotation.m[i] = rot[size_t(i)].get<double>();
  cam.translation = {tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>()};
  return cam;
}

}  // namespace

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }

  DatasetManifest m;
  try {
    m.every_kth = j.value("split", nlohmann::json::object()).value("every_kth", 20);
    for (const auto& cj : j.at("cameras")) m.cameras.push_back(camera_from_json(cj));
    for (const auto& ij : j.at("images")) {
      ManifestEntry e;
      e.path = ij.at("path").get<std::string>();
      e.camera = ij.at("camera").get<int>();
      m.images.push_back(e);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }

  for (const ManifestEntry& e : m.images)
    if (e.camera < 0 || size_t(e.camera) >= m.cameras.size())
      throw DataError(path + ": image '" + e.path + "' references missing camera " +
                      std::to_string(e.camera));
  for (size_t i = 0; i < m.cameras.size(); ++i)
    if (!m.cameras[i].valid())
      throw DataError(path + ": camera " + std::to_string(i) + " is invalid");
  return m;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
  nlohmann::json j;
  j["split"]["every_kth"] = manifest.every_kth;
  j["cameras"] = nlohmann::json::array();
  for (const Camera& cam : manifest.cameras) j["cameras"].push_back(camera_to_json(cam));
  j["images"] = nlohmann::json::array();
  for (const ManifestEntry& e : manifest.images)
    j["images"].push_back({{"path", e.path}, {"camera", e.camera}});

  std::ofstream out(path);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw DataError(path + ": write failed");
}

Dataset load_dataset(const std::string& manifest_path) {
  const DatasetManifest m = read_manifest(manifest_path);
  const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

  std::vector<Camera> cameras;
  std::vector<ImageBuffer> images;
  cameras.reserve(m.images.size());
  images.reserve(m.images.size());
  for (const ManifestEntry& e : m.images) {
    const std::string file = (base / e.path).string();
    const std::string ext = std::filesystem::path(e.path).extension().string();
    ImageBuffer img = ext == ".pfm" ? read_pfm(file) : read_png(file);
    const Camera& cam = m.cameras[size_t(e.camera)];
    if (img.width != cam.width || img.height != cam.height)
      throw DataError(file + ": image is " + std::to_string(img.width) + "x" +
                      std::to_string(img.height) + " but camera expects " +
                      std::to_string(cam.width) + "x" + std::to_string(cam.height));
    cameras.push_back(cam);
    images.push_back(std::move(img));
  }
  return make_dataset(std::move(cameras), std::move(images), m.every_kth);
}

}  // namespace pvet::io
