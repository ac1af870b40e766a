#include "mattekit/image.hpp"

#include <algorithm>
#include <cmath>

namespace mattekit {

namespace {

struct BilinearTap {
  int lo, hi;
  double w_hi;
};

// Pixel-center mapping: src = (dst + 0.5) * (in/out) - 0.5, clamped.
std::vector<BilinearTap> bilinear_taps(int in, int out) {
  std::vector<BilinearTap> taps(static_cast<size_t>(out));
  const double s = static_cast<double>(in) / out;
  for (int d = 0; d < out; ++d) {
    double src = (d + 0.5) * s - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in - 1));
    const int lo = static_cast<int>(std::floor(src));
    taps[static_cast<size_t>(d)] = {lo, std::min(lo + 1, in - 1), src - lo};
  }
  return taps;
}

void check_crop(int sh, int sw, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > sh || x0 + w > sw)
    throw ConfigError("crop window out of bounds");
}

}  // namespace

Image resize_bilinear(const Image& src, int out_h, int out_w) {
  const auto ty = bilinear_taps(src.height, out_h);
  const auto tx = bilinear_taps(src.width, out_w);
  Image dst(out_h, out_w);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x)
      for (int c = 0; c < 3; ++c) {
        const auto& a = ty[static_cast<size_t>(y)];
        const auto& b = tx[static_cast<size_t>(x)];
        const double top = src.at(a.lo, b.lo, c) * (1 - b.w_hi) + src.at(a.lo, b.hi, c) * b.w_hi;
        const double bot = src.at(a.hi, b.lo, c) * (1 - b.w_hi) + src.at(a.hi, b.hi, c) * b.w_hi;
        dst.at(y, x, c) = top * (1 - a.w_hi) + bot * a.w_hi;
      }
  return dst;
}

AlphaMatte resize_bilinear(const AlphaMatte& src, int out_h, int out_w) {
  const auto ty = bilinear_taps(src.height, out_h);
  const auto tx = bilinear_taps(src.width, out_w);
  AlphaMatte dst(out_h, out_w);
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const auto& a = ty[static_cast<size_t>(y)];
      const auto& b = tx[static_cast<size_t>(x)];
      const double top = src.at(a.lo, b.lo) * (1 - b.w_hi) + src.at(a.lo, b.hi) * b.w_hi;
      const double bot = src.at(a.hi, b.lo) * (1 - b.w_hi) + src.at(a.hi, b.hi) * b.w_hi;
      dst.at(y, x) = top * (1 - a.w_hi) + bot * a.w_hi;
    }
  return dst;
}

Image crop(const Image& src, int y0, int x0, int h, int w) {
  check_crop(src.height, src.width, y0, x0, h, w);
  Image dst(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) dst.at(y, x, c) = src.at(y0 + y, x0 + x, c);
  return dst;
}

AlphaMatte crop(const AlphaMatte& src, int y0, int x0, int h, int w) {
  check_crop(src.height, src.width, y0, x0, h, w);
  AlphaMatte dst(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) dst.at(y, x) = src.at(y0 + y, x0 + x);
  return dst;
}

Image flip_horizontal(const Image& src) {
  Image dst(src.height, src.width);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      for (int c = 0; c < 3; ++c) dst.at(y, x, c) = src.at(y, src.width - 1 - x, c);
  return dst;
}

AlphaMatte flip_horizontal(const AlphaMatte& src) {
  AlphaMatte dst(src.height, src.width);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) dst.at(y, x) = src.at(y, src.width - 1 - x);
  return dst;
}

}  // namespace mattekit
