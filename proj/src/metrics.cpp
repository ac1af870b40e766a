#include "mattekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "mattekit/png_io.hpp"
#include "mattekit/trimap.hpp"

namespace fs = std::filesystem;

namespace mattekit {

namespace {

void check_pair(const AlphaMatte& p, const AlphaMatte& g, const std::vector<double>& mask) {
  if (p.height != g.height || p.width != g.width)
    throw ConfigError("metrics: prediction and ground truth sizes differ");
  if (mask.size() != p.values.size())
    throw ConfigError("metrics: mask length does not match rasters");
}

bool empty_mask(const std::vector<double>& mask) {
  for (double m : mask)
    if (m != 0.0) return false;
  return true;
}

// Normalized Gaussian and its exact derivative, radius ceil(4*sigma).
void gaussian_kernels(double sigma, std::vector<double>& g, std::vector<double>& dg) {
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  g.resize(2 * static_cast<size_t>(radius) + 1);
  dg.resize(g.size());
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    g[static_cast<size_t>(i + radius)] = std::exp(-i * i / (2.0 * sigma * sigma));
    sum += g[static_cast<size_t>(i + radius)];
  }
  for (double& v : g) v /= sum;
  for (int i = -radius; i <= radius; ++i)
    dg[static_cast<size_t>(i + radius)] = -i / (sigma * sigma) * g[static_cast<size_t>(i + radius)];
}

std::vector<double> filter_rows(const std::vector<double>& in, int h, int w,
                                const std::vector<double>& k) {
  const int radius = (static_cast<int>(k.size()) - 1) / 2;
  std::vector<double> out(in.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<size_t>(i + radius)] *
               in[static_cast<size_t>(y) * w + std::clamp(x - i, 0, w - 1)];
      out[static_cast<size_t>(y) * w + x] = acc;
    }
  return out;
}

std::vector<double> filter_cols(const std::vector<double>& in, int h, int w,
                                const std::vector<double>& k) {
  const int radius = (static_cast<int>(k.size()) - 1) / 2;
  std::vector<double> out(in.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += k[static_cast<size_t>(i + radius)] *
               in[static_cast<size_t>(std::clamp(y - i, 0, h - 1)) * w + x];
      out[static_cast<size_t>(y) * w + x] = acc;
    }
  return out;
}

std::vector<double> gradient_magnitude(const AlphaMatte& m, const std::vector<double>& g,
                                       const std::vector<double>& dg) {
  const auto gx = filter_cols(filter_rows(m.values, m.height, m.width, dg), m.height, m.width, g);
  const auto gy = filter_cols(filter_rows(m.values, m.height, m.width, g), m.height, m.width, dg);
  std::vector<double> mag(m.values.size());
  for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::hypot(gx[i], gy[i]);
  return mag;
}

// Union-find over the 4-connected true pixels; returns the member set of the
// largest component (ties broken by smallest member index).
std::vector<uint8_t> largest_component(const std::vector<uint8_t>& bin, int h, int w) {
  const int64_t n = static_cast<int64_t>(h) * w;
  std::vector<int64_t> parent(static_cast<size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int64_t(int64_t)> find = [&](int64_t i) {
    while (parent[static_cast<size_t>(i)] != i) {
      parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
      i = parent[static_cast<size_t>(i)];
    }
    return i;
  };
  auto unite = [&](int64_t a, int64_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int64_t i = static_cast<int64_t>(y) * w + x;
      if (!bin[static_cast<size_t>(i)]) continue;
      if (x + 1 < w && bin[static_cast<size_t>(i) + 1]) unite(i, i + 1);
      if (y + 1 < h && bin[static_cast<size_t>(i + w)]) unite(i, i + w);
    }
  std::vector<int64_t> size(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n; ++i)
    if (bin[static_cast<size_t>(i)]) ++size[static_cast<size_t>(find(i))];
  int64_t best_root = -1, best_size = 0;
  for (int64_t i = 0; i < n; ++i) {
    if (!bin[static_cast<size_t>(i)] || find(i) != i) continue;
    // Roots are component minima, so scanning ascending resolves ties
    // toward the smallest member index.
    if (size[static_cast<size_t>(i)] > best_size) {
      best_size = size[static_cast<size_t>(i)];
      best_root = i;
    }
  }
  std::vector<uint8_t> member(static_cast<size_t>(n), 0);
  if (best_root >= 0)
    for (int64_t i = 0; i < n; ++i)
      if (bin[static_cast<size_t>(i)] && find(i) == best_root) member[static_cast<size_t>(i)] = 1;
  return member;
}

}  // namespace

double sad(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const std::vector<double>& mask) {
  check_pair(alpha_p, alpha_g, mask);
  if (empty_mask(mask)) {
    warn("sad: empty mask, reporting 0");
    return 0.0;
  }
  double acc = 0.0;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != 0.0) acc += std::abs(alpha_p.values[i] - alpha_g.values[i]);
  return acc / 1000.0;
}

double mse(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const std::vector<double>& mask) {
  check_pair(alpha_p, alpha_g, mask);
  double acc = 0.0;
  int64_t count = 0;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != 0.0) {
      const double d = alpha_p.values[i] - alpha_g.values[i];
      acc += d * d;
      ++count;
    }
  if (count == 0) {
    warn("mse: empty mask, reporting 0");
    return 0.0;
  }
  return acc / static_cast<double>(count);
}

double grad_error(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g,
                  const std::vector<double>& mask, double sigma) {
  check_pair(alpha_p, alpha_g, mask);
  if (sigma <= 0.0) throw ConfigError("grad_error: sigma must be > 0");
  std::vector<double> g, dg;
  gaussian_kernels(sigma, g, dg);
  const auto mag_p = gradient_magnitude(alpha_p, g, dg);
  const auto mag_g = gradient_magnitude(alpha_g, g, dg);
  double acc = 0.0;
  for (size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != 0.0) {
      const double d = mag_p[i] - mag_g[i];
      acc += d * d;
    }
  return acc / 1000.0;
}

double conn_error(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g,
                  const std::vector<double>& mask, double step, double theta) {
  check_pair(alpha_p, alpha_g, mask);
  if (step <= 0.0 || step >= 1.0) throw ConfigError("conn_error: step must be in (0,1)");
  const int h = alpha_p.height, w = alpha_p.width;
  const int64_t n = static_cast<int64_t>(h) * w;

  // l(i) = largest threshold at which i lies in the largest 4-connected
  // component of the joint binarization.
  std::vector<double> level(static_cast<size_t>(n), 0.0);
  std::vector<uint8_t> bin(static_cast<size_t>(n));
  for (int k = 1; k * step < 1.0 - 1e-12; ++k) {
    const double th = k * step;
    for (int64_t i = 0; i < n; ++i)
      bin[static_cast<size_t>(i)] =
          (alpha_p.values[static_cast<size_t>(i)] >= th && alpha_g.values[static_cast<size_t>(i)] >= th)
              ? 1
              : 0;
    const auto member = largest_component(bin, h, w);
    for (int64_t i = 0; i < n; ++i)
      if (member[static_cast<size_t>(i)]) level[static_cast<size_t>(i)] = th;
  }

  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    if (mask[static_cast<size_t>(i)] == 0.0) continue;
    const double dp = alpha_p.values[static_cast<size_t>(i)] - level[static_cast<size_t>(i)];
    const double dg = alpha_g.values[static_cast<size_t>(i)] - level[static_cast<size_t>(i)];
    const double phi_p = 1.0 - (dp >= theta ? dp : 0.0);
    const double phi_g = 1.0 - (dg >= theta ? dg : 0.0);
    acc += std::abs(phi_p - phi_g);
  }
  return acc / 1000.0;
}

MetricReport compute_metrics(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g,
                             const std::vector<double>& mask, const MetricParams& params) {
  MetricReport r;
  r.sad = sad(alpha_p, alpha_g, mask);
  r.mse = mse(alpha_p, alpha_g, mask);
  r.grad = grad_error(alpha_p, alpha_g, mask, params.grad_sigma);
  r.conn = conn_error(alpha_p, alpha_g, mask, params.conn_step, params.conn_theta);
  for (double m : mask)
    if (m != 0.0) ++r.unknown_pixel_count;
  return r;
}

EvalResult evaluate(const DatasetManifest& manifest, const std::string& pred_dir,
                    const MetricParams& params) {
  EvalResult result;
  const int64_t n = static_cast<int64_t>(manifest.entries.size());
  std::vector<EvalEntryResult> scored(static_cast<size_t>(n));
  std::vector<uint8_t> found(static_cast<size_t>(n), 0);

  parallel_for(n, [&](int64_t i) {
    const auto& entry = manifest.entries[static_cast<size_t>(i)];
    const std::string id = fs::path(entry.alpha_path).stem().string();
    scored[static_cast<size_t>(i)].id = id;
    const std::string pred_path =
        (fs::path(pred_dir) / fs::path(entry.alpha_path).filename()).string();
    if (!fs::exists(pred_path)) return;
    const AlphaMatte pred = read_png_gray(pred_path);
    const AlphaMatte gt = read_png_gray(manifest.resolve(entry.alpha_path));
    const Trimap trimap = read_trimap_png(manifest.resolve(entry.trimap_path));
    scored[static_cast<size_t>(i)].report = compute_metrics(pred, gt, unknown_mask(trimap), params);
    found[static_cast<size_t>(i)] = 1;
  });

  // Deterministic fold in manifest order.
  int64_t count = 0;
  for (int64_t i = 0; i < n; ++i) {
    const auto& entry = manifest.entries[static_cast<size_t>(i)];
    if (!found[static_cast<size_t>(i)]) {
      result.missing.push_back(
          (fs::path(pred_dir) / fs::path(entry.alpha_path).filename()).string());
      continue;
    }
    result.per_image.push_back(scored[static_cast<size_t>(i)]);
    result.aggregate.sad += scored[static_cast<size_t>(i)].report.sad;
    result.aggregate.mse += scored[static_cast<size_t>(i)].report.mse;
    result.aggregate.grad += scored[static_cast<size_t>(i)].report.grad;
    result.aggregate.conn += scored[static_cast<size_t>(i)].report.conn;
    result.aggregate.unknown_pixel_count += scored[static_cast<size_t>(i)].report.unknown_pixel_count;
    ++count;
  }
  if (count > 0) {
    result.aggregate.sad /= static_cast<double>(count);
    result.aggregate.mse /= static_cast<double>(count);
    result.aggregate.grad /= static_cast<double>(count);
    result.aggregate.conn /= static_cast<double>(count);
  }
  return result;
}

void write_eval_csv(const EvalResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write eval CSV: " + path);
  out << "id,sad,mse,grad,conn,unknown_count\n";
  char buf[256];
  for (const auto& e : result.per_image) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%lld\n", e.id.c_str(),
                  e.report.sad, e.report.mse, e.report.grad, e.report.conn,
                  static_cast<long long>(e.report.unknown_pixel_count));
    out << buf;
  }
}

}  // namespace mattekit
