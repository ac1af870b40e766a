#pragma once

#include <string>
#include <vector>

#include "mattekit/net.hpp"

namespace mattekit {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction. Moment buffers are owned here and
// are part of the checkpointed training state.
class Adam {
 public:
  Adam(AdamConfig config, const std::vector<Parameter>& params);

  // grads[i] aligns with params[i]. A non-finite gradient aborts with a
  // NumericError naming the parameter and the caller-provided context
  // (typically "iteration N, batch ...").
  void step(std::vector<Parameter>& params, const std::vector<const std::vector<double>*>& grads,
            double lr, const std::string& context);

  int64_t t() const { return t_; }
  const std::vector<std::vector<double>>& m() const { return m_; }
  const std::vector<std::vector<double>>& v() const { return v_; }
  void restore(int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v);

 private:
  AdamConfig config_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace mattekit
