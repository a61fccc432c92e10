#include "pointvet/io/volume.hpp"

#include <fstream>
#include <vector>

#include <json.hpp>

#include "pointvet/core/errors.hpp"

namespace pvet::io {

void write_volume(const ErrorVolume& volume, const std::string& path) {
  {
    std::ofstream raw(path, std::ios::binary);
    if (!raw) throw DataError(path + ": cannot open for writing");
    std::vector<float> buf(volume.density.size());
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = float(volume.density[i]);
    raw.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size() * 4));
    if (!raw) throw DataError(path + ": write failed");
  }

  nlohmann::json side;
  side["dims"] = {volume.dims[0], volume.dims[1], volume.dims[2]};
  side["origin"] = {volume.origin.x, volume.origin.y, volume.origin.z};
  side["voxel_size"] = volume.voxel_size;
  std::ofstream js(path + ".json");
  if (!js) throw DataError(path + ".json: cannot open for writing");
  js << side.dump(2) << "\n";
  if (!js) throw DataError(path + ".json: write failed");
}

ErrorVolume read_volume(const std::string& path) {
  nlohmann::json side;
  {
    std::ifstream js(path + ".json");
    if (!js) throw DataError(path + ".json: cannot open");
    try {
      js >> side;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ".json: " + e.what());
    }
  }

  ErrorVolume vol;
  try {
    const auto dims = side.at("dims");
    const auto origin = side.at("origin");
    if (dims.size() != 3 || origin.size() != 3)
      throw DataError(path + ".json: dims/origin must have 3 entries");
    vol.dims = {dims[0].get<int>(), dims[1].get<int>(), dims[2].get<int>()};
    vol.origin = {origin[0].get<double>(), origin[1].get<double>(), origin[2].get<double>()};
    vol.voxel_size = side.at("voxel_size").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ".json: " + e.what());
  }
  if (vol.dims[0] < 1 || vol.dims[1] < 1 || vol.dims[2] < 1 || !(vol.voxel_size > 0.0))
    throw DataError(path + ".json: invalid volume geometry");

  std::ifstream raw(path, std::ios::binary);
  if (!raw) throw DataError(path + ": cannot open");
  raw.seekg(0, std::ios::end);
  const auto bytes = size_t(raw.tellg());
  raw.seekg(0);
  const size_t expected = vol.voxel_count() * 4;
  if (bytes != expected)
    throw DataError(path + ": payload holds " + std::to_string(bytes) + " bytes, sidecar dims need " +
                    std::to_string(expected));

  std::vector<float> buf(vol.voxel_count());
  raw.read(reinterpret_cast<char*>(buf.data()), std::streamsize(expected));
  if (size_t(raw.gcount()) != expected) throw DataError(path + ": read failed");
  vol.density.resize(buf.size());
  for (size_t i = 0; i < buf.size(); ++i) vol.density[i] = double(buf[i]);
  return vol;
}

}  // namespace pvet::io
