#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mattekit/common.hpp"

namespace mattekit {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);
bool all_finite(const std::vector<double>& v);

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  int node_id = -1;  // index of the producing op on the tape; -1 for leaves
};
}  // namespace detail

// Shared handle to an N-D double array (N×C×H×W layout for 4-D data).
// Copies alias the same storage; values are written once at creation and
// then treated as immutable except for gradient accumulation.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_vector(Shape shape, std::vector<double> values, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int dim(size_t i) const { return impl_->shape[i]; }
  int64_t size() const { return static_cast<int64_t>(impl_->value.size()); }
  bool requires_grad() const { return impl_->requires_grad; }

  // Handle semantics: a const Tensor& still exposes its shared buffers.
  std::vector<double>& values() const { return impl_->value; }
  double item() const;  // scalar tensors only

  // Gradient buffer, allocated and zeroed on first access.
  std::vector<double>& grad() const;
  bool grad_allocated() const { return !impl_->grad.empty(); }
  void zero_grad() const;

  detail::TensorImpl* impl() const { return impl_.get(); }
  int node_id() const { return impl_->node_id; }
  void set_node_id(int id) const { impl_->node_id = id; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
};

// Define-by-run tape. Ops append nodes in execution order, which is a
// topological order by construction; backward() replays them in reverse.
// A tape and its tensors belong to a single thread. Independent tapes may
// run concurrently.
class Tape {
 public:
  void record(std::vector<Tensor> inputs, const Tensor& output, std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
  // requires_grad tensor reachable from loss. Unreachable tensors are
  // untouched. Throws UsageError if loss is not scalar.
  void backward(const Tensor& loss);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace mattekit
