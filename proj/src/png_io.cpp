#include "mattekit/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace mattekit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint16_t quantize(double v, int max_val) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<uint16_t>(std::lround(c * max_val));
}

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

// Decodes any PNG to 8- or 16-bit RGB rows in [0, max].
void read_rows(const std::string& path, int& h, int& w, int& channels, int& bit_depth,
               std::vector<std::vector<png_byte>>& rows) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open PNG for reading: " + path);
  PngReader r;
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!r.png) throw IoError("libpng init failed for " + path);
  r.info = png_create_info_struct(r.png);
  if (!r.info) throw IoError("libpng info init failed for " + path);
  if (setjmp(png_jmpbuf(r.png))) throw IoError("corrupt PNG: " + path);

  png_init_io(r.png, file.get());
  png_read_info(r.png, r.info);

  png_set_palette_to_rgb(r.png);
  png_set_expand_gray_1_2_4_to_8(r.png);
  png_set_strip_alpha(r.png);
  png_read_update_info(r.png, r.info);

  h = static_cast<int>(png_get_image_height(r.png, r.info));
  w = static_cast<int>(png_get_image_width(r.png, r.info));
  bit_depth = png_get_bit_depth(r.png, r.info);
  channels = png_get_channels(r.png, r.info);

  rows.assign(static_cast<size_t>(h), std::vector<png_byte>(png_get_rowbytes(r.png, r.info)));
  std::vector<png_bytep> ptrs(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y) ptrs[static_cast<size_t>(y)] = rows[static_cast<size_t>(y)].data();
  png_read_image(r.png, ptrs.data());
  png_read_end(r.png, nullptr);
}

double sample(const std::vector<png_byte>& row, int x, int c, int channels, int bit_depth) {
  if (bit_depth == 16) {
    const size_t i = (static_cast<size_t>(x) * channels + c) * 2;
    const int v = (row[i] << 8) | row[i + 1];  // PNG is big-endian
    return v / 65535.0;
  }
  return row[static_cast<size_t>(x) * channels + c] / 255.0;
}

void write_rows(const std::string& path, int h, int w, int color_type, int bit_depth,
                const std::vector<std::vector<png_byte>>& rows) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open PNG for writing: " + path);
  PngWriter wr;
  wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!wr.png) throw IoError("libpng init failed for " + path);
  wr.info = png_create_info_struct(wr.png);
  if (!wr.info) throw IoError("libpng info init failed for " + path);
  if (setjmp(png_jmpbuf(wr.png))) throw IoError("PNG write failed: " + path);

  png_init_io(wr.png, file.get());
  png_set_IHDR(wr.png, wr.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h),
               bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(wr.png, wr.info);
  for (const auto& row : rows) png_write_row(wr.png, const_cast<png_bytep>(row.data()));
  png_write_end(wr.png, nullptr);
}

}  // namespace

void write_png_rgb(const std::string& path, const Image& img) {
  std::vector<std::vector<png_byte>> rows(static_cast<size_t>(img.height),
                                          std::vector<png_byte>(static_cast<size_t>(img.width) * 3));
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c)
        rows[static_cast<size_t>(y)][static_cast<size_t>(x) * 3 + c] =
            static_cast<png_byte>(quantize(img.at(y, x, c), 255));
  write_rows(path, img.height, img.width, PNG_COLOR_TYPE_RGB, 8, rows);
}

void write_png_gray(const std::string& path, const AlphaMatte& m, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16)
    throw ConfigError("write_png_gray: bit depth must be 8 or 16");
  const size_t stride = static_cast<size_t>(m.width) * (bit_depth / 8);
  std::vector<std::vector<png_byte>> rows(static_cast<size_t>(m.height),
                                          std::vector<png_byte>(stride));
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (bit_depth == 8) {
        rows[static_cast<size_t>(y)][static_cast<size_t>(x)] =
            static_cast<png_byte>(quantize(m.at(y, x), 255));
      } else {
        const uint16_t v = quantize(m.at(y, x), 65535);
        rows[static_cast<size_t>(y)][static_cast<size_t>(x) * 2] = static_cast<png_byte>(v >> 8);
        rows[static_cast<size_t>(y)][static_cast<size_t>(x) * 2 + 1] =
            static_cast<png_byte>(v & 0xff);
      }
    }
  write_rows(path, m.height, m.width, PNG_COLOR_TYPE_GRAY, bit_depth, rows);
}

Image read_png_rgb(const std::string& path) {
  int h, w, channels, bit_depth;
  std::vector<std::vector<png_byte>> rows;
  read_rows(path, h, w, channels, bit_depth, rows);
  Image img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const int src_c = channels >= 3 ? c : 0;
        img.at(y, x, c) = sample(rows[static_cast<size_t>(y)], x, src_c, channels, bit_depth);
      }
  return img;
}

AlphaMatte read_png_gray(const std::string& path) {
  int h, w, channels, bit_depth;
  std::vector<std::vector<png_byte>> rows;
  read_rows(path, h, w, channels, bit_depth, rows);
  AlphaMatte m(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (channels >= 3) {
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) acc += sample(rows[static_cast<size_t>(y)], x, c, channels, bit_depth);
        m.at(y, x) = acc / 3.0;
      } else {
        m.at(y, x) = sample(rows[static_cast<size_t>(y)], x, 0, channels, bit_depth);
      }
    }
  return m;
}

}  // namespace mattekit
