#include "mattekit/tensor.hpp"

#include <cmath>
#include <cstdio>
#include <unordered_set>

namespace mattekit {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw ConfigError("tensor shape must have positive dims, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->value.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (double& x : t.values()) x = value;
  return t;
}

Tensor Tensor::from_vector(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size()))
    throw ConfigError("tensor data length " + std::to_string(values.size()) +
                      " does not match shape " + shape_str(shape));
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->value = std::move(values);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

double Tensor::item() const {
  if (size() != 1) throw UsageError("item() requires a scalar tensor, got " + shape_str(shape()));
  return impl_->value[0];
}

std::vector<double>& Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->value.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() const {
  if (!impl_->grad.empty()) impl_->grad.assign(impl_->value.size(), 0.0);
}

void Tape::record(std::vector<Tensor> inputs, const Tensor& output, std::function<void()> backward) {
  output.set_node_id(static_cast<int>(nodes_.size()));
  nodes_.push_back(Node{std::move(inputs), output, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw UsageError("backward() requires a scalar loss, got " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;  // nothing reachable carries gradients

  std::unordered_set<const detail::TensorImpl*> needed;
  needed.insert(loss.impl());
  loss.grad()[0] += 1.0;

  // Reverse sweep. A node runs only if some consumer (or the loss seed)
  // deposited gradient demand on its output; topological order guarantees
  // the output gradient is complete by then.
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    if (!it->output.requires_grad()) continue;
    if (needed.find(it->output.impl()) == needed.end()) continue;
    it->backward();
    for (const Tensor& in : it->inputs)
      if (in.requires_grad()) needed.insert(in.impl());
  }
}

}  // namespace mattekit
