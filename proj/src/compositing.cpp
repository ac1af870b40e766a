#include "mattekit/compositing.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mattekit/png_io.hpp"
#include "mattekit/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mattekit {

namespace {

double quantize8(double v) { return std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

void quantize8(Image& img) {
  for (double& v : img.pixels) v = quantize8(v);
}
void quantize8(AlphaMatte& m) {
  for (double& v : m.values) v = quantize8(v);
}

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Seeded base color with a soft diagonal shading ramp.
Image colored_field(Rng& rng, int size) {
  Image img(size, size);
  double base[3], tilt[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = rng.uniform(0.25, 0.9);
    tilt[c] = rng.uniform(-0.15, 0.15);
  }
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double t = (y + x) / (2.0 * (size - 1));
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = std::clamp(base[c] + tilt[c] * (2.0 * t - 1.0), 0.0, 1.0);
    }
  return img;
}

AlphaMatte disk_alpha(Rng& rng, int size) {
  AlphaMatte a(size, size);
  const double cx = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0);
  const double cy = size / 2.0 + rng.uniform(-size / 16.0, size / 16.0);
  const double r_out = rng.uniform(0.30, 0.42) * size;
  const double r_in = rng.uniform(0.76, 0.84) * r_out;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double d = std::hypot(y + 0.5 - cy, x + 0.5 - cx);
      a.at(y, x) = smoothstep((r_out - d) / (r_out - r_in));
    }
  return a;
}

AlphaMatte ring_alpha(Rng& rng, int size) {
  AlphaMatte a(size, size);
  const double cx = size / 2.0 + rng.uniform(-size / 20.0, size / 20.0);
  const double cy = size / 2.0 + rng.uniform(-size / 20.0, size / 20.0);
  const double r_mid = rng.uniform(0.26, 0.34) * size;
  const double half_core = rng.uniform(0.04, 0.07) * size;
  const double band = rng.uniform(0.03, 0.06) * size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double d = std::abs(std::hypot(y + 0.5 - cy, x + 0.5 - cx) - r_mid);
      a.at(y, x) = smoothstep((half_core + band - d) / band);
    }
  return a;
}

AlphaMatte hair_alpha(Rng& rng, int size) {
  AlphaMatte a(size, size);
  const int strokes = 28 + static_cast<int>(rng.below(20));
  const double root_y = size * rng.uniform(0.72, 0.9);
  const double root_x = size * rng.uniform(0.35, 0.65);
  for (int s = 0; s < strokes; ++s) {
    // Quadratic Bezier fanning upward from a common root.
    const double x0 = root_x + rng.uniform(-size * 0.06, size * 0.06);
    const double y0 = root_y + rng.uniform(-size * 0.03, size * 0.03);
    const double x2 = size * rng.uniform(0.05, 0.95);
    const double y2 = size * rng.uniform(0.05, 0.35);
    const double x1 = (x0 + x2) / 2 + rng.uniform(-size * 0.2, size * 0.2);
    const double y1 = (y0 + y2) / 2 + rng.uniform(-size * 0.1, size * 0.1);
    const double sigma = rng.uniform(0.6, 1.1);
    const double two_s2 = 2.0 * sigma * sigma;
    const int steps = size * 3;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double u = 1.0 - t;
      const double px = u * u * x0 + 2 * u * t * x1 + t * t * x2;
      const double py = u * u * y0 + 2 * u * t * y1 + t * t * y2;
      const int reach = static_cast<int>(std::ceil(3 * sigma));
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          const int yy = static_cast<int>(py) + dy;
          const int xx = static_cast<int>(px) + dx;
          if (yy < 0 || yy >= size || xx < 0 || xx >= size) continue;
          const double d2 = (yy + 0.5 - py) * (yy + 0.5 - py) + (xx + 0.5 - px) * (xx + 0.5 - px);
          a.at(yy, xx) = std::max(a.at(yy, xx), std::exp(-d2 / two_s2));
        }
    }
  }
  return a;
}

std::string entry_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d.png", index);
  return buf;
}

}  // namespace

Image composite(const Image& fg, const Image& bg, const AlphaMatte& alpha) {
  if (fg.height != bg.height || fg.width != bg.width || fg.height != alpha.height ||
      fg.width != alpha.width)
    throw ConfigError("composite: fg, bg and alpha must share dimensions");
  Image out(fg.height, fg.width);
  for (int y = 0; y < fg.height; ++y)
    for (int x = 0; x < fg.width; ++x) {
      const double a = alpha.at(y, x);
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = a * fg.at(y, x, c) + (1.0 - a) * bg.at(y, x, c);
    }
  return out;
}

FgKind fg_kind_from_string(const std::string& s) {
  if (s == "soft_disk") return FgKind::SoftDisk;
  if (s == "soft_ring") return FgKind::SoftRing;
  if (s == "hair_strokes") return FgKind::HairStrokes;
  throw ConfigError("unknown foreground kind: " + s);
}

std::string to_string(FgKind k) {
  switch (k) {
    case FgKind::SoftDisk: return "soft_disk";
    case FgKind::SoftRing: return "soft_ring";
    case FgKind::HairStrokes: return "hair_strokes";
  }
  return "?";
}

SyntheticForeground generate_synthetic_foreground(uint64_t seed, int size, FgKind kind) {
  if (size < 32) throw ConfigError("synthetic foreground size must be >= 32");
  Rng rng(derive_seed(seed, 0x66670001ULL));
  SyntheticForeground out;
  out.image = colored_field(rng, size);
  switch (kind) {
    case FgKind::SoftDisk: out.alpha = disk_alpha(rng, size); break;
    case FgKind::SoftRing: out.alpha = ring_alpha(rng, size); break;
    case FgKind::HairStrokes: out.alpha = hair_alpha(rng, size); break;
  }
  return out;
}

Image generate_synthetic_background(uint64_t seed, int height, int width) {
  Rng rng(derive_seed(seed, 0x62670001ULL));
  Image img(height, width);
  double c0[3], c1[3];
  for (int c = 0; c < 3; ++c) {
    c0[c] = rng.uniform(0.05, 0.95);
    c1[c] = rng.uniform(0.05, 0.95);
  }
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double fy = std::sin(angle), fx = std::cos(angle);
  const double freq = rng.uniform(1.5, 4.0);
  const double ripple = rng.uniform(0.0, 0.08);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double u = (fy * y / (height - 1.0) + fx * x / (width - 1.0) + 1.0) / 2.0;
      const double r = ripple * std::sin(freq * 6.283185307179586 * u);
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = std::clamp(c0[c] + (c1[c] - c0[c]) * u + r, 0.0, 1.0);
    }
  return img;
}

std::string DatasetManifest::resolve(const std::string& rel) const {
  return (fs::path(root) / rel).string();
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  json j;
  j["entries"] = json::array();
  for (const auto& e : m.entries) {
    j["entries"].push_back({{"foreground_path", e.foreground_path},
                            {"alpha_path", e.alpha_path},
                            {"background_path", e.background_path},
                            {"composite_path", e.composite_path},
                            {"trimap_path", e.trimap_path},
                            {"seed", e.seed}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest: " + path);
  json j;
  in >> j;
  DatasetManifest m;
  m.root = fs::path(path).parent_path().string();
  std::vector<uint64_t> seeds;
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.foreground_path = je.at("foreground_path").get<std::string>();
    e.alpha_path = je.at("alpha_path").get<std::string>();
    e.background_path = je.at("background_path").get<std::string>();
    e.composite_path = je.at("composite_path").get<std::string>();
    e.trimap_path = je.at("trimap_path").get<std::string>();
    e.seed = je.at("seed").get<uint64_t>();
    for (const std::string& rel : {e.foreground_path, e.alpha_path, e.background_path,
                                   e.composite_path, e.trimap_path})
      if (!fs::exists(m.resolve(rel))) throw IoError("manifest references missing file: " + m.resolve(rel));
    seeds.push_back(e.seed);
    m.entries.push_back(std::move(e));
  }
  std::sort(seeds.begin(), seeds.end());
  if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end())
    throw ConfigError("manifest entry seeds are not unique: " + path);
  return m;
}

DatasetManifest synthesize_dataset(const SynthesisConfig& config, const std::string& out_dir,
                                   uint64_t seed) {
  if (config.num_fg < 1 || config.bgs_per_fg < 1)
    throw ConfigError("synthesize_dataset: num_fg and bgs_per_fg must be >= 1");
  if (config.trimap_kernel_min % 2 == 0 || config.trimap_kernel_max % 2 == 0 ||
      config.trimap_kernel_min > config.trimap_kernel_max)
    throw ConfigError("synthesize_dataset: trimap kernel bounds must be odd and ordered");
  if (config.kinds.empty()) throw ConfigError("synthesize_dataset: at least one foreground kind");

  for (const char* sub : {"fg", "alpha", "bg", "comp", "trimap"}) {
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / sub, ec);
    if (ec) throw IoError("cannot create directory " + (fs::path(out_dir) / sub).string());
  }

  const int total = config.num_fg * config.bgs_per_fg;
  DatasetManifest manifest;
  manifest.root = out_dir;
  manifest.entries.resize(static_cast<size_t>(total));

  parallel_for(total, [&](int64_t index) {
    const int fg_index = static_cast<int>(index) / config.bgs_per_fg;
    const uint64_t entry_seed = derive_seed(seed, 0xdada0001ULL, static_cast<uint64_t>(index));

    const FgKind kind = config.kinds[static_cast<size_t>(fg_index) % config.kinds.size()];
    auto fg = generate_synthetic_foreground(derive_seed(seed, 0xf0f0ULL, fg_index), config.size, kind);
    Image bg = generate_synthetic_background(entry_seed, config.size, config.size);

    // Keep the pair separable: a composite over a near-identical background
    // carries almost no opacity signal in its transition band.
    {
      double lum_fg = 0.0, lum_bg = 0.0;
      for (size_t i = 0; i < fg.image.pixels.size(); ++i) {
        lum_fg += fg.image.pixels[i];
        lum_bg += bg.pixels[i];
      }
      if (std::abs(lum_fg - lum_bg) / static_cast<double>(fg.image.pixels.size()) < 0.25)
        for (double& v : bg.pixels) v = 1.0 - v;
    }

    // Quantize all sources first so the stored composite is consistent with
    // the stored inputs to within its own rounding step.
    quantize8(fg.image);
    quantize8(fg.alpha);
    quantize8(bg);
    const Image comp = composite(fg.image, bg, fg.alpha);

    Rng rng(derive_seed(entry_seed, 0x7117ULL));
    const int kmin = config.trimap_kernel_min, kmax = config.trimap_kernel_max;
    const int kernel = kmin + 2 * static_cast<int>(rng.below((kmax - kmin) / 2 + 1));
    const Trimap trimap = from_alpha_morphology(fg.alpha, kernel);

    const std::string name = entry_name(static_cast<int>(index));
    ManifestEntry e;
    e.foreground_path = "fg/" + name;
    e.alpha_path = "alpha/" + name;
    e.background_path = "bg/" + name;
    e.composite_path = "comp/" + name;
    e.trimap_path = "trimap/" + name;
    e.seed = entry_seed;
    write_png_rgb(manifest.resolve(e.foreground_path), fg.image);
    write_png_gray(manifest.resolve(e.alpha_path), fg.alpha);
    write_png_rgb(manifest.resolve(e.background_path), bg);
    write_png_rgb(manifest.resolve(e.composite_path), comp);
    write_trimap_png(manifest.resolve(e.trimap_path), trimap);
    manifest.entries[static_cast<size_t>(index)] = std::move(e);
  });

  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

AugmentResult augment(const Image& img, const AlphaMatte& alpha, const Trimap& trimap,
                      uint64_t seed, const AugmentConfig& config) {
  if (img.height != alpha.height || img.width != alpha.width || img.height != trimap.height ||
      img.width != trimap.width)
    throw ConfigError("augment: rasters must share dimensions");

  std::vector<int> usable;
  for (int s : config.crop_sizes)
    if (s <= img.height && s <= img.width) usable.push_back(s);
  if (usable.empty())
    throw ConfigError("augment: image " + std::to_string(img.height) + "x" +
                      std::to_string(img.width) + " smaller than every crop size");

  Rng rng(derive_seed(seed, 0xa6a6ULL));
  const int s = usable[static_cast<size_t>(rng.below(static_cast<int64_t>(usable.size())))];

  AugmentResult res;
  res.crop_size = s;

  // Prefer Unknown pixels whose centered window fits; fall back to any
  // Unknown pixel with a clamped window, then to a uniform window.
  std::vector<int> unknown_fit, unknown_any;
  const int half = s / 2;
  for (int y = 0; y < trimap.height; ++y)
    for (int x = 0; x < trimap.width; ++x)
      if (trimap.at(y, x) == TriLabel::Unknown) {
        const int idx = y * trimap.width + x;
        unknown_any.push_back(idx);
        if (y - half >= 0 && x - half >= 0 && y - half + s <= trimap.height &&
            x - half + s <= trimap.width)
          unknown_fit.push_back(idx);
      }

  int y0, x0;
  if (!unknown_fit.empty()) {
    const int p = unknown_fit[static_cast<size_t>(rng.below(static_cast<int64_t>(unknown_fit.size())))];
    y0 = p / trimap.width - half;
    x0 = p % trimap.width - half;
  } else if (!unknown_any.empty()) {
    const int p = unknown_any[static_cast<size_t>(rng.below(static_cast<int64_t>(unknown_any.size())))];
    y0 = std::clamp(p / trimap.width - half, 0, trimap.height - s);
    x0 = std::clamp(p % trimap.width - half, 0, trimap.width - s);
  } else {
    res.fallback_uniform = true;
    y0 = static_cast<int>(rng.below(trimap.height - s + 1));
    x0 = static_cast<int>(rng.below(trimap.width - s + 1));
  }
  res.y0 = y0;
  res.x0 = x0;

  Image ci = crop(img, y0, x0, s, s);
  AlphaMatte ca = crop(alpha, y0, x0, s, s);
  Trimap ct = crop(trimap, y0, x0, s, s);
  if (s != config.resolution) {
    ci = resize_bilinear(ci, config.resolution, config.resolution);
    ca = resize_bilinear(ca, config.resolution, config.resolution);
    ct = resize_nearest(ct, config.resolution, config.resolution);
  }
  res.flipped = config.enable_flip && rng.uniform() < 0.5;
  if (res.flipped) {
    ci = flip_horizontal(ci);
    ca = flip_horizontal(ca);
    ct = flip_horizontal(ct);
  }
  res.image = std::move(ci);
  res.alpha = std::move(ca);
  res.trimap = std::move(ct);
  return res;
}

}  // namespace mattekit
