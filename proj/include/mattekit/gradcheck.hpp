#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mattekit/tensor.hpp"

namespace mattekit {

// Scalar-valued function of several tensors, rebuilt on a fresh tape per
// evaluation (define-by-run).
using TensorFn = std::function<Tensor(Tape&, const std::vector<Tensor>&)>;

struct GradCheckReport {
  std::vector<double> max_rel_err;  // one entry per input
  double worst = 0.0;
  bool passed(double tolerance) const { return worst < tolerance; }
};

// Compares analytic gradients against central differences
// (f(x+eps) - f(x-eps)) / (2 eps) per coordinate. Relative error is
// |a - n| / max(|a|, |n|, 1e-8). f must be deterministic; a repeated
// base evaluation that disagrees bitwise raises UsageError.
GradCheckReport check_gradients(const TensorFn& f, const std::vector<Tensor>& inputs,
                                double epsilon = 1e-4, double tolerance = 1e-4);

}  // namespace mattekit
