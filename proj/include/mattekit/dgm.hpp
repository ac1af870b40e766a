#pragma once

#include <vector>

#include "mattekit/image.hpp"

namespace mattekit {

enum class ResponseNormalize { RawPdf, PeakOne };

// Gaussian loss-weighting schedule. With the defaults, weighting starts
// sharply peaked at opacity 0.5 and flattens by 0.005 in variance every
// step_interval iterations until the cap.
struct DgmConfig {
  double mu = 0.5;
  double sigma2_init = 0.25;
  double sigma2_step = 0.005;
  int step_interval = 2000;
  double sigma2_cap = 0.75;
  ResponseNormalize normalize = ResponseNormalize::RawPdf;

  void validate() const;
};

// Per-pixel Gaussian response coefficients over the ground-truth alpha.
struct ResponseMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // strictly positive
};

// R(i) = exp(-(alpha_g(i) - mu)^2 / (2 sigma2)) / sqrt(2 pi sigma2);
// PeakOne divides by the peak so R(mu) = 1.
ResponseMap response_map(const AlphaMatte& alpha_gt, double mu, double sigma2,
                         ResponseNormalize normalize = ResponseNormalize::RawPdf);

// Scalar form of the response, shared by the map and the tests.
double gaussian_response(double alpha, double mu, double sigma2,
                         ResponseNormalize normalize = ResponseNormalize::RawPdf);

// sigma2(t) = min(cap, init + step * floor(t / interval)); non-decreasing.
double sigma2_at(int64_t iteration, const DgmConfig& config);

// True iff moving from sigma2_a to sigma2_b (a < b) both lowers the raw-pdf
// peak and shrinks the peak-to-tail ratio R(mu)/R(0): the weighting flattens.
bool response_ordering_check(double sigma2_a, double sigma2_b, double mu = 0.5);

}  // namespace mattekit
