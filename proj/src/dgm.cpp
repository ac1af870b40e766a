#include "mattekit/dgm.hpp"

#include <cmath>

#include "mattekit/common.hpp"

namespace mattekit {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
}

void DgmConfig::validate() const {
  if (sigma2_init <= 0.0) throw ConfigError("dgm: sigma2_init must be > 0");
  if (sigma2_cap < sigma2_init) throw ConfigError("dgm: sigma2_cap must be >= sigma2_init");
  if (step_interval < 1) throw ConfigError("dgm: step_interval must be >= 1");
  if (sigma2_step < 0.0) throw ConfigError("dgm: sigma2_step must be >= 0");
}

double gaussian_response(double alpha, double mu, double sigma2, ResponseNormalize normalize) {
  if (sigma2 <= 0.0) throw ConfigError("response: sigma2 must be > 0");
  const double d = alpha - mu;
  const double e = std::exp(-d * d / (2.0 * sigma2));
  return normalize == ResponseNormalize::PeakOne ? e : e / std::sqrt(kTwoPi * sigma2);
}

ResponseMap response_map(const AlphaMatte& alpha_gt, double mu, double sigma2,
                         ResponseNormalize normalize) {
  if (sigma2 <= 0.0) throw ConfigError("response_map: sigma2 must be > 0");
  ResponseMap r;
  r.height = alpha_gt.height;
  r.width = alpha_gt.width;
  r.values.resize(alpha_gt.values.size());
  const double inv_two_s2 = 1.0 / (2.0 * sigma2);
  const double norm =
      normalize == ResponseNormalize::PeakOne ? 1.0 : 1.0 / std::sqrt(kTwoPi * sigma2);
  for (size_t i = 0; i < r.values.size(); ++i) {
    const double d = alpha_gt.values[i] - mu;
    r.values[i] = norm * std::exp(-d * d * inv_two_s2);
  }
  return r;
}

double sigma2_at(int64_t iteration, const DgmConfig& config) {
  config.validate();
  if (iteration < 0) throw ConfigError("sigma2_at: iteration must be >= 0");
  const double steps = static_cast<double>(iteration / config.step_interval);
  return std::min(config.sigma2_cap, config.sigma2_init + config.sigma2_step * steps);
}

bool response_ordering_check(double sigma2_a, double sigma2_b, double mu) {
  if (!(sigma2_a > 0.0) || !(sigma2_a < sigma2_b))
    throw ConfigError("response_ordering_check requires 0 < sigma2_a < sigma2_b");
  const double peak_a = gaussian_response(mu, mu, sigma2_a);
  const double peak_b = gaussian_response(mu, mu, sigma2_b);
  const double ratio_a = peak_a / gaussian_response(0.0, mu, sigma2_a);
  const double ratio_b = peak_b / gaussian_response(0.0, mu, sigma2_b);
  return peak_b < peak_a && ratio_b < ratio_a;
}

}  // namespace mattekit
