#include "mattekit/gradcheck.hpp"

#include <cmath>

namespace mattekit {

namespace {

std::vector<Tensor> clone_leaves(const std::vector<Tensor>& inputs, bool requires_grad) {
  std::vector<Tensor> out;
  out.reserve(inputs.size());
  for (const Tensor& t : inputs)
    out.push_back(Tensor::from_vector(t.shape(), t.values(), requires_grad));
  return out;
}

double eval_scalar(const TensorFn& f, const std::vector<Tensor>& leaves) {
  Tape tape;
  Tensor y = f(tape, leaves);
  if (y.size() != 1) throw UsageError("check_gradients: f must return a scalar");
  return y.values()[0];
}

}  // namespace

GradCheckReport check_gradients(const TensorFn& f, const std::vector<Tensor>& inputs,
                                double epsilon, double /*tolerance*/) {
  // Analytic pass.
  std::vector<Tensor> leaves = clone_leaves(inputs, /*requires_grad=*/true);
  Tape tape;
  Tensor loss = f(tape, leaves);
  if (loss.size() != 1) throw UsageError("check_gradients: f must return a scalar");
  const double base = loss.values()[0];
  tape.backward(loss);

  // Determinism guard: a second evaluation must reproduce the base value.
  {
    std::vector<Tensor> again = clone_leaves(inputs, /*requires_grad=*/false);
    if (eval_scalar(f, again) != base)
      throw UsageError("check_gradients: f is not deterministic, comparison invalid");
  }

  GradCheckReport report;
  std::vector<Tensor> probe = clone_leaves(inputs, /*requires_grad=*/false);
  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    double worst = 0.0;
    auto& vals = probe[ti].values();
    const std::vector<double> analytic = leaves[ti].grad_allocated()
                                             ? leaves[ti].grad()
                                             : std::vector<double>(vals.size(), 0.0);
    for (size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + epsilon;
      const double up = eval_scalar(f, probe);
      vals[i] = saved - epsilon;
      const double down = eval_scalar(f, probe);
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, rel);
    }
    report.max_rel_err.push_back(worst);
    report.worst = std::max(report.worst, worst);
  }
  return report;
}

}  // namespace mattekit
