#pragma once

#include <string>
#include <vector>

#include "mattekit/compositing.hpp"
#include "mattekit/image.hpp"

namespace mattekit {

// Protocol knobs for the two structural metrics. Defaults follow the
// common matting benchmark convention; all are overridable from the CLI.
struct MetricParams {
  double grad_sigma = 1.4;   // derivative-of-Gaussian scale
  double conn_step = 0.1;    // threshold ladder spacing
  double conn_theta = 0.15;  // connectivity penalty cutoff
};

// SAD and Conn are reported in thousands; Grad is the squared gradient
// difference scaled by 1/1000; MSE is a raw mean.
struct MetricReport {
  double sad = 0.0;
  double mse = 0.0;
  double grad = 0.0;
  double conn = 0.0;
  int64_t unknown_pixel_count = 0;
};

double sad(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const std::vector<double>& mask);
double mse(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g, const std::vector<double>& mask);

// Sum over the mask of squared differences between derivative-of-Gaussian
// gradient magnitudes (kernel radius ceil(4*sigma), edge replication), /1000.
double grad_error(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g,
                  const std::vector<double>& mask, double sigma = 1.4);

// Connectivity discrepancy: per threshold level, both mattes binarize at
// >= theta_k, the largest 4-connected component of the intersection is the
// source region, and l(i) is the largest level at which pixel i belongs to
// it. phi(i) = 1 - d(i)*[d(i) >= theta] with d = alpha - l; the error is
// the masked sum |phi_p - phi_g| / 1000 with l shared between both mattes.
double conn_error(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g,
                  const std::vector<double>& mask, double step = 0.1, double theta = 0.15);

MetricReport compute_metrics(const AlphaMatte& alpha_p, const AlphaMatte& alpha_g,
                             const std::vector<double>& mask, const MetricParams& params = {});

struct EvalEntryResult {
  std::string id;
  MetricReport report;
};

struct EvalResult {
  std::vector<EvalEntryResult> per_image;
  MetricReport aggregate;           // mean over scored entries
  std::vector<std::string> missing;  // prediction files not found
};

// Scores pred_dir/<basename of entry alpha> against each manifest entry over
// its trimap's Unknown region. Missing predictions are listed and excluded.
EvalResult evaluate(const DatasetManifest& manifest, const std::string& pred_dir,
                    const MetricParams& params = {});

void write_eval_csv(const EvalResult& result, const std::string& path);

}  // namespace mattekit
