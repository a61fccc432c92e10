#pragma once

#include <string>

#include "pointvet/core/types.hpp"

namespace pvet::io {

enum class PlyFormat { BinaryLittleEndian, Ascii };

// Reads ASCII or binary-little-endian PLY. Vertices need x,y,z; optional
// red/green/blue (uchar), alpha_raw (float), is_env (uchar); other scalar
// properties are skipped. Missing optionals default to midgray, alpha_raw 0,
// is_env 0. Malformed or truncated files raise DataError with a byte offset.
PointCloud read_ply(const std::string& path);

// Positions as float32, colors quantized to 8 bits.
void write_ply(const PointCloud& cloud, const std::string& path,
               PlyFormat format = PlyFormat::BinaryLittleEndian);

}  // namespace pvet::io
