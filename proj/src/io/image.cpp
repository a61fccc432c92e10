#include "pointvet/io/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "pointvet/core/errors.hpp"

namespace pvet::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports fatal errors by longjmp; the message is stashed in the
// error_ptr string so the jump target can rethrow it as a DataError.
void on_png_error(png_structp png, png_const_charp msg) {
  auto* s = static_cast<std::string*>(png_get_error_ptr(png));
  if (s) *s = msg;
  longjmp(png_jmpbuf(png), 1);
}

void on_png_warning(png_structp, png_const_charp) {}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
  }
};

struct PngWriter {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngWriter() {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
  }
};

}  // namespace

ImageBuffer read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError(path + ": cannot open");

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw DataError(path + ": not a PNG file");

  std::string err;
  PngReader ctx;
  ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!ctx.png) throw DataError(path + ": png init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw DataError(path + ": png init failed");

  std::vector<unsigned char> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(ctx.png)))
    throw DataError(path + ": " + (err.empty() ? "corrupt PNG stream" : err));

  png_init_io(ctx.png, fp.get());
  png_set_sig_bytes(ctx.png, 8);
  png_read_info(ctx.png, ctx.info);

  if (png_get_bit_depth(ctx.png, ctx.info) == 16)
    throw DataError(path + ": unsupported bit depth 16");
  const int color_type = png_get_color_type(ctx.png, ctx.info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(ctx.png);
  if (png_get_bit_depth(ctx.png, ctx.info) < 8) png_set_expand(ctx.png);
  if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
  png_set_strip_alpha(ctx.png);
  png_read_update_info(ctx.png, ctx.info);

  const png_uint_32 width = png_get_image_width(ctx.png, ctx.info);
  const png_uint_32 height = png_get_image_height(ctx.png, ctx.info);
  if (png_get_channels(ctx.png, ctx.info) != 3 || png_get_bit_depth(ctx.png, ctx.info) != 8)
    throw DataError(path + ": unsupported PNG layout");

  raw.resize(size_t(width) * height * 3);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = raw.data() + size_t(r) * width * 3;
  png_read_image(ctx.png, rows.data());
  png_read_end(ctx.png, nullptr);

  ImageBuffer img(int(width), int(height), 3);
  for (size_t i = 0; i < raw.size(); ++i) img.data[i] = double(raw[i]) / 255.0;
  return img;
}

void write_png(const ImageBuffer& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3)
    throw DataError(path + ": PNG writer takes 1 or 3 channels, got " +
                    std::to_string(image.channels));
  if (image.width < 1 || image.height < 1) throw DataError(path + ": empty image");

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw DataError(path + ": cannot open for writing");

  std::string err;
  PngWriter ctx;
  ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!ctx.png) throw DataError(path + ": png init failed");
  ctx.info = png_create_info_struct(ctx.png);
  if (!ctx.info) throw DataError(path + ": png init failed");

  std::vector<unsigned char> row(size_t(image.width) * size_t(image.channels));
  if (setjmp(png_jmpbuf(ctx.png)))
    throw DataError(path + ": " + (err.empty() ? "png write failed" : err));

  png_init_io(ctx.png, fp.get());
  png_set_IHDR(ctx.png, ctx.info, png_uint_32(image.width), png_uint_32(image.height), 8,
               image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(ctx.png, ctx.info);

  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c)
      for (int k = 0; k < image.channels; ++k)
        row[size_t(c) * size_t(image.channels) + size_t(k)] =
            (unsigned char)std::lround(std::clamp(image.at(r, c, k), 0.0, 1.0) * 255.0);
    png_write_row(ctx.png, row.data());
  }
  png_write_end(ctx.png, nullptr);
}

ImageBuffer read_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open");

  std::string magic;
  int width = 0, height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (!in || (magic != "PF" && magic != "Pf")) throw DataError(path + ": not a PFM file");
  if (width < 1 || height < 1) throw DataError(path + ": bad PFM dimensions");
  in.get();  // single whitespace byte after the scale

  const int channels = magic == "PF" ? 3 : 1;
  const size_t samples = size_t(width) * size_t(height) * size_t(channels);
  std::vector<float> raw(samples);
  in.read(reinterpret_cast<char*>(raw.data()), std::streamsize(samples * sizeof(float)));
  if (size_t(in.gcount()) != samples * sizeof(float))
    throw DataError(path + ": truncated PFM payload");

  if (scale > 0.0) {  // positive scale marks a big-endian payload
    for (float& f : raw) {
      uint32_t u;
      std::memcpy(&u, &f, 4);
      u = __builtin_bswap32(u);
      std::memcpy(&f, &u, 4);
    }
  }

  // Rows are stored bottom-up.
  ImageBuffer img(width, height, channels);
  const size_t row_samples = size_t(width) * size_t(channels);
  for (int r = 0; r < height; ++r) {
    const float* src = raw.data() + size_t(height - 1 - r) * row_samples;
    for (size_t i = 0; i < row_samples; ++i)
      img.data[size_t(r) * row_samples + i] = double(src[i]);
  }
  return img;
}

void write_pfm(const ImageBuffer& image, const std::string& path) {
  if (image.channels != 1 && image.channels != 3)
    throw DataError(path + ": PFM writer takes 1 or 3 channels, got " +
                    std::to_string(image.channels));
  if (image.width < 1 || image.height < 1) throw DataError(path + ": empty image");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path + ": cannot open for writing");
  out << (image.channels == 3 ? "PF" : "Pf") << "\n"
      << image.width << " " << image.height << "\n-1.0\n";

  const size_t row_samples = size_t(image.width) * size_t(image.channels);
  std::vector<float> row(row_samples);
  for (int r = image.height - 1; r >= 0; --r) {
    for (size_t i = 0; i < row_samples; ++i)
      row[i] = float(image.data[size_t(r) * row_samples + i]);
    out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row_samples * 4));
  }
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace pvet::io
