#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mattekit/image.hpp"
#include "mattekit/trimap.hpp"

namespace mattekit {

// I = alpha*F + (1-alpha)*B per pixel and channel; inputs in [0,1] keep the
// output in [0,1] with no clamping.
Image composite(const Image& fg, const Image& bg, const AlphaMatte& alpha);

enum class FgKind { SoftDisk, SoftRing, HairStrokes };

FgKind fg_kind_from_string(const std::string& s);
std::string to_string(FgKind k);

struct SyntheticForeground {
  Image image;
  AlphaMatte alpha;
};

// Deterministic in (seed, size, kind). Alpha always carries a genuine
// transition band: >= 5% of pixels strictly inside (0.05, 0.95).
// SoftDisk alpha is a monotone non-increasing function of the distance to
// the disk center.
SyntheticForeground generate_synthetic_foreground(uint64_t seed, int size, FgKind kind);

// Smooth two-tone gradient with low-frequency ripple; values in [0,1].
Image generate_synthetic_background(uint64_t seed, int height, int width);

struct ManifestEntry {
  std::string foreground_path;
  std::string alpha_path;
  std::string background_path;
  std::string composite_path;
  std::string trimap_path;
  uint64_t seed = 0;
};

struct DatasetManifest {
  std::string root;  // directory paths are relative to
  std::vector<ManifestEntry> entries;

  std::string resolve(const std::string& rel) const;
};

void save_manifest(const DatasetManifest& m, const std::string& path);
// Verifies that every referenced file exists and that entry seeds are unique.
DatasetManifest load_manifest(const std::string& path);

struct SynthesisConfig {
  int num_fg = 8;
  int bgs_per_fg = 8;
  int size = 64;
  int trimap_kernel_min = 3;  // odd
  int trimap_kernel_max = 9;  // odd
  std::vector<FgKind> kinds{FgKind::SoftDisk, FgKind::SoftRing, FgKind::HairStrokes};
};

// Writes num_fg*bgs_per_fg composites with paired alpha/trimap/fg/bg under
// out_dir/{fg,alpha,bg,comp,trimap}/NNNN.png plus manifest.json. Rasters are
// quantized to 8 bits before compositing, so a reloaded composite matches
// the recomposition of its reloaded inputs to within one PNG rounding step.
DatasetManifest synthesize_dataset(const SynthesisConfig& config, const std::string& out_dir,
                                   uint64_t seed);

struct AugmentConfig {
  std::vector<int> crop_sizes{64, 96, 128};
  int resolution = 64;
  bool enable_flip = true;
};

struct AugmentResult {
  Image image;
  AlphaMatte alpha;
  Trimap trimap;
  int crop_size = 0;
  int y0 = 0, x0 = 0;
  bool flipped = false;
  bool fallback_uniform = false;  // no Unknown pixel to center on
};

// Random crop centered on an Unknown pixel (uniform fallback when none),
// resized to config.resolution (bilinear for image/alpha, nearest for
// labels), with an optional horizontal flip applied to all three rasters.
AugmentResult augment(const Image& img, const AlphaMatte& alpha, const Trimap& trimap,
                      uint64_t seed, const AugmentConfig& config = {});

}  // namespace mattekit
