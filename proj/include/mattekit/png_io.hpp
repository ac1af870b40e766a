#pragma once

#include <string>

#include "mattekit/image.hpp"

namespace mattekit {

// 8-bit interchange. Values quantize as round(v * 255) on write and load
// back as v / 255; grayscale reads of RGB files average the channels.
void write_png_rgb(const std::string& path, const Image& img);
void write_png_gray(const std::string& path, const AlphaMatte& m, int bit_depth = 8);

Image read_png_rgb(const std::string& path);
AlphaMatte read_png_gray(const std::string& path);

}  // namespace mattekit
