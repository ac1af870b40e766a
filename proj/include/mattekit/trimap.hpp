#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mattekit/image.hpp"

namespace mattekit {

enum class TriLabel : uint8_t { Background = 0, Unknown = 1, Foreground = 2 };

struct Trimap {
  int height = 0;
  int width = 0;
  std::vector<TriLabel> labels;

  Trimap() = default;
  Trimap(int h, int w, TriLabel fill = TriLabel::Unknown)
      : height(h), width(w), labels(static_cast<size_t>(h) * w, fill) {}

  TriLabel& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }
  TriLabel at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
};

// Foreground = erosion of {alpha >= 1-1e-6}, Background = erosion of
// {alpha <= 1e-6}, both by a kernel×kernel square with edge replication;
// everything else Unknown. Every fractional-alpha pixel lands in Unknown.
// kernel must be odd and in [3, 25].
Trimap from_alpha_morphology(const AlphaMatte& alpha, int kernel);

// Unknown = pixels within Euclidean distance `radius` of {0 < alpha < 1}
// (exact two-pass distance transform); the rest threshold on alpha.
Trimap from_alpha_distance(const AlphaMatte& alpha, double radius);

// 1.0 where Unknown, 0.0 elsewhere; same layout as AlphaMatte values.
std::vector<double> unknown_mask(const Trimap& t);
int64_t unknown_count(const Trimap& t);

// Network input encoding: Background 0.0, Unknown 0.5, Foreground 1.0.
std::vector<double> encode_channel(const Trimap& t);

// 8-bit grayscale interchange with {0, 128, 255}.
void write_trimap_png(const std::string& path, const Trimap& t);
Trimap read_trimap_png(const std::string& path);

// Exact squared Euclidean distance to the nearest set pixel (feature[i] != 0),
// or a large sentinel when the set is empty. Exposed for the oracle tests.
std::vector<double> squared_distance_transform(const std::vector<uint8_t>& feature, int h, int w);

Trimap flip_horizontal(const Trimap& src);
Trimap crop(const Trimap& src, int y0, int x0, int h, int w);
Trimap resize_nearest(const Trimap& src, int out_h, int out_w);

}  // namespace mattekit
