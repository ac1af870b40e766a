#include "mattekit/adam.hpp"

#include <cmath>

namespace mattekit {

Adam::Adam(AdamConfig config, const std::vector<Parameter>& params) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Parameter& p : params) {
    m_.emplace_back(p.value.size(), 0.0);
    v_.emplace_back(p.value.size(), 0.0);
  }
}

void Adam::step(std::vector<Parameter>& params, const std::vector<const std::vector<double>*>& grads,
                double lr, const std::string& context) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ConfigError("adam: parameter/gradient count mismatch");
  for (size_t pi = 0; pi < params.size(); ++pi)
    for (double g : *grads[pi])
      if (!std::isfinite(g))
        throw NumericError("adam: non-finite gradient for parameter '" + params[pi].name + "' (" +
                           context + ")");

  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto& m = m_[pi];
    auto& v = v_[pi];
    auto& x = params[pi].value;
    const auto& g = *grads[pi];
    for (size_t i = 0; i < x.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      x[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

void Adam::restore(int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw ConfigError("adam: restored moment count mismatch");
  for (size_t i = 0; i < m.size(); ++i)
    if (m[i].size() != m_[i].size() || v[i].size() != v_[i].size())
      throw ConfigError("adam: restored moment size mismatch");
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace mattekit
