#pragma once

#include <string>

#include "pointvet/core/types.hpp"

namespace pvet::io {

// 8-bit PNG; palette and gray inputs are expanded to RGB, alpha is dropped,
// values land in [0,1]. 16-bit files are rejected.
ImageBuffer read_png(const std::string& path);

// Writes 1-channel (gray) or 3-channel (RGB) buffers, clamped and quantized
// to 8 bits.
void write_png(const ImageBuffer& image, const std::string& path);

// PFM, little-endian, 1 or 3 channels, rows stored bottom-up. Lossless for
// float32 values.
ImageBuffer read_pfm(const std::string& path);
void write_pfm(const ImageBuffer& image, const std::string& path);

}  // namespace pvet::io
