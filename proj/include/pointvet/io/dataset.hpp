#pragma once

#include <string>
#include <vector>

#include "pointvet/core/dataset.hpp"

namespace pvet::io {

struct ManifestEntry {
  std::string path;  // image file, relative to the manifest
  int camera = 0;    // index into the camera table
};

// JSON description of a dataset: full cameras (pose + intrinsics), image
// files referencing them, and the hold-out stride.
struct DatasetManifest {
  std::vector<Camera> cameras;
  std::vector<ManifestEntry> images;
  int every_kth = 20;
};

DatasetManifest read_manifest(const std::string& path);
void write_manifest(const DatasetManifest& manifest, const std::string& path);

// Reads the manifest and every referenced image (PNG or PFM by extension).
Dataset load_dataset(const std::string& manifest_path);

}  // namespace pvet::io
