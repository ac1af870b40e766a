#pragma once

#include <cstdint>
#include <vector>

#include "mattekit/common.hpp"

namespace mattekit {

// H×W×3 raster, row-major, channel-interleaved, values in [0,1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> pixels;  // height*width*3

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), pixels(static_cast<size_t>(h) * w * 3, fill) {}

  double& at(int y, int x, int c) { return pixels[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

// H×W opacity raster in [0,1].
struct AlphaMatte {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // height*width

  AlphaMatte() = default;
  AlphaMatte(int h, int w, double fill = 0.0)
      : height(h), width(w), values(static_cast<size_t>(h) * w, fill) {}

  double& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }
  double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

// Bilinear resampling with pixel-center alignment; a constant raster
// resizes to the same constant.
Image resize_bilinear(const Image& src, int out_h, int out_w);
AlphaMatte resize_bilinear(const AlphaMatte& src, int out_h, int out_w);

Image crop(const Image& src, int y0, int x0, int h, int w);
AlphaMatte crop(const AlphaMatte& src, int y0, int x0, int h, int w);

Image flip_horizontal(const Image& src);
AlphaMatte flip_horizontal(const AlphaMatte& src);

}  // namespace mattekit
