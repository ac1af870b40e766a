#include "mattekit/trimap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mattekit/png_io.hpp"

namespace mattekit {

namespace {

constexpr double kFgThreshold = 1.0 - 1e-6;
constexpr double kBgThreshold = 1e-6;

// Separable min filter with clamped (edge-replicating) window.
std::vector<uint8_t> erode(const std::vector<uint8_t>& in, int h, int w, int radius) {
  std::vector<uint8_t> tmp(in.size()), out(in.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint8_t m = 1;
      for (int dx = -radius; dx <= radius; ++dx)
        m = std::min(m, in[static_cast<size_t>(y) * w + std::clamp(x + dx, 0, w - 1)]);
      tmp[static_cast<size_t>(y) * w + x] = m;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint8_t m = 1;
      for (int dy = -radius; dy <= radius; ++dy)
        m = std::min(m, tmp[static_cast<size_t>(std::clamp(y + dy, 0, h - 1)) * w + x]);
      out[static_cast<size_t>(y) * w + x] = m;
    }
  return out;
}

// 1-D squared-distance lower envelope (Felzenszwalb & Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, int n) {
  std::vector<int> v(static_cast<size_t>(n));
  std::vector<double> z(static_cast<size_t>(n) + 1);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    for (;;) {
      const int p = v[static_cast<size_t>(k)];
      s = ((f[static_cast<size_t>(q)] + q * q) - (f[static_cast<size_t>(p)] + p * p)) /
          (2.0 * q - 2.0 * p);
      if (s > z[static_cast<size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<size_t>(k)] = q;
    z[static_cast<size_t>(k)] = s;
    z[static_cast<size_t>(k) + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<size_t>(k) + 1] < q) ++k;
    const int p = v[static_cast<size_t>(k)];
    d[static_cast<size_t>(q)] = (q - p) * static_cast<double>(q - p) + f[static_cast<size_t>(p)];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const std::vector<uint8_t>& feature, int h, int w) {
  constexpr double kInf = 1e18;
  std::vector<double> dist(feature.size());
  for (size_t i = 0; i < feature.size(); ++i) dist[i] = feature[i] ? 0.0 : kInf;

  std::vector<double> col(static_cast<size_t>(h)), dcol(static_cast<size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col[static_cast<size_t>(y)] = dist[static_cast<size_t>(y) * w + x];
    edt_1d(col, dcol, h);
    for (int y = 0; y < h; ++y) dist[static_cast<size_t>(y) * w + x] = dcol[static_cast<size_t>(y)];
  }
  std::vector<double> row(static_cast<size_t>(w)), drow(static_cast<size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) row[static_cast<size_t>(x)] = dist[static_cast<size_t>(y) * w + x];
    edt_1d(row, drow, w);
    for (int x = 0; x < w; ++x) dist[static_cast<size_t>(y) * w + x] = drow[static_cast<size_t>(x)];
  }
  return dist;
}

Trimap from_alpha_morphology(const AlphaMatte& alpha, int kernel) {
  if (kernel < 3 || kernel > 25 || kernel % 2 == 0)
    throw ConfigError("trimap kernel must be odd and within [3, 25], got " +
                      std::to_string(kernel));
  const int h = alpha.height, w = alpha.width;
  const int radius = (kernel - 1) / 2;
  std::vector<uint8_t> fg(alpha.values.size()), bg(alpha.values.size());
  for (size_t i = 0; i < alpha.values.size(); ++i) {
    fg[i] = alpha.values[i] >= kFgThreshold ? 1 : 0;
    bg[i] = alpha.values[i] <= kBgThreshold ? 1 : 0;
  }
  const auto fg_core = erode(fg, h, w, radius);
  const auto bg_core = erode(bg, h, w, radius);
  Trimap t(h, w, TriLabel::Unknown);
  for (size_t i = 0; i < t.labels.size(); ++i) {
    if (fg_core[i]) t.labels[i] = TriLabel::Foreground;
    else if (bg_core[i]) t.labels[i] = TriLabel::Background;
  }
  return t;
}

Trimap from_alpha_distance(const AlphaMatte& alpha, double radius) {
  if (radius <= 0.0) throw ConfigError("trimap distance radius must be > 0");
  const int h = alpha.height, w = alpha.width;
  std::vector<uint8_t> fractional(alpha.values.size());
  for (size_t i = 0; i < alpha.values.size(); ++i)
    fractional[i] = (alpha.values[i] > 0.0 && alpha.values[i] < 1.0) ? 1 : 0;
  const auto dist2 = squared_distance_transform(fractional, h, w);
  const double r2 = radius * radius;
  Trimap t(h, w, TriLabel::Unknown);
  for (size_t i = 0; i < t.labels.size(); ++i) {
    if (dist2[i] <= r2) t.labels[i] = TriLabel::Unknown;
    else t.labels[i] = alpha.values[i] >= 0.5 ? TriLabel::Foreground : TriLabel::Background;
  }
  return t;
}

std::vector<double> unknown_mask(const Trimap& t) {
  std::vector<double> mask(t.labels.size());
  for (size_t i = 0; i < t.labels.size(); ++i)
    mask[i] = t.labels[i] == TriLabel::Unknown ? 1.0 : 0.0;
  return mask;
}

int64_t unknown_count(const Trimap& t) {
  int64_t n = 0;
  for (TriLabel l : t.labels)
    if (l == TriLabel::Unknown) ++n;
  return n;
}

std::vector<double> encode_channel(const Trimap& t) {
  std::vector<double> enc(t.labels.size());
  for (size_t i = 0; i < t.labels.size(); ++i) {
    switch (t.labels[i]) {
      case TriLabel::Background: enc[i] = 0.0; break;
      case TriLabel::Unknown: enc[i] = 0.5; break;
      case TriLabel::Foreground: enc[i] = 1.0; break;
    }
  }
  return enc;
}

void write_trimap_png(const std::string& path, const Trimap& t) {
  AlphaMatte m(t.height, t.width);
  for (size_t i = 0; i < t.labels.size(); ++i) {
    switch (t.labels[i]) {
      case TriLabel::Background: m.values[i] = 0.0; break;
      case TriLabel::Unknown: m.values[i] = 128.0 / 255.0; break;
      case TriLabel::Foreground: m.values[i] = 1.0; break;
    }
  }
  write_png_gray(path, m);
}

Trimap read_trimap_png(const std::string& path) {
  const AlphaMatte m = read_png_gray(path);
  Trimap t(m.height, m.width);
  for (size_t i = 0; i < m.values.size(); ++i) {
    const int v = static_cast<int>(std::lround(m.values[i] * 255.0));
    if (v <= 64) t.labels[i] = TriLabel::Background;
    else if (v >= 192) t.labels[i] = TriLabel::Foreground;
    else t.labels[i] = TriLabel::Unknown;
  }
  return t;
}

Trimap flip_horizontal(const Trimap& src) {
  Trimap dst(src.height, src.width);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) dst.at(y, x) = src.at(y, src.width - 1 - x);
  return dst;
}

Trimap crop(const Trimap& src, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || h < 1 || w < 1 || y0 + h > src.height || x0 + w > src.width)
    throw ConfigError("crop window out of bounds");
  Trimap dst(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) dst.at(y, x) = src.at(y0 + y, x0 + x);
  return dst;
}

Trimap resize_nearest(const Trimap& src, int out_h, int out_w) {
  Trimap dst(out_h, out_w);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const int yi = std::clamp(static_cast<int>((y + 0.5) * sy), 0, src.height - 1);
      const int xi = std::clamp(static_cast<int>((x + 0.5) * sx), 0, src.width - 1);
      dst.at(y, x) = src.at(yi, xi);
    }
  return dst;
}

}  // namespace mattekit
