#pragma once

#include <string>

#include "pointvet/core/types.hpp"

namespace pvet::io {

// Raw little-endian float32 densities (x-fastest) at `path`, geometry in a
// JSON sidecar at `path + ".json"`. Roundtrips float32 values bitwise.
void write_volume(const ErrorVolume& volume, const std::string& path);
ErrorVolume read_volume(const std::string& path);

}  // namespace pvet::io
