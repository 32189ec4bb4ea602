#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ldmdn {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  // For leaves: user-set flag. For op results: true iff some parent needs a gradient.
  bool requires_grad = false;
  bool leaf = true;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Propagates this node's grad into its parents' grads.
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

/// Dense row-major array with optional reverse-mode gradient tracking.
///
/// A tensor is a shared handle: copies alias the same storage and graph node,
/// like a framework tensor. Use `clone()` or `detach()` for an independent copy.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;
  using Node = TensorNode<T>;

  BasicTensor() = default;
  explicit BasicTensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static BasicTensor zeros(Shape shape, bool requires_grad = false);
  static BasicTensor full(Shape shape, T value, bool requires_grad = false);
  static BasicTensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false);
  static BasicTensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T& operator[](std::size_t i) { return node_->data[i]; }
  const T& operator[](std::size_t i) const { return node_->data[i]; }

  bool requires_grad() const { return node_->requires_grad; }
  bool is_leaf() const { return node_->leaf; }
  void set_requires_grad(bool flag);
  bool has_grad() const { return node_->grad.size() == node_->data.size() && !node_->data.empty(); }
  std::span<T> grad() { return node_->grad; }
  std::span<const T> grad() const { return node_->grad; }
  void zero_grad();

  /// Value of a single-element tensor.
  T item() const;

  /// Independent copy of the values, outside any graph.
  BasicTensor detach() const;
  BasicTensor clone() const { return detach(); }

  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

/// Accumulates d(loss)/d(p) into every reachable tensor with requires_grad.
/// Leaf gradients accumulate across calls; interior gradients are reset.
template <typename T>
void backward(const BasicTensor<T>& loss);

/// True unless a NoGradGuard is active on this thread.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Records which side of every kink (leaky-relu origin, |.| origin) each op
/// input falls on. Finite-difference checks use it to detect stencils that
/// straddle a non-differentiable point.
struct KinkProbe {
  std::uint64_t hash = 1469598103934665603ULL;
  std::uint64_t count = 0;
  void record(bool positive) {
    hash ^= positive ? 0x9e3779b97f4a7c15ULL : 0x7f4a7c159e3779b9ULL;
    hash *= 1099511628211ULL;
    ++count;
  }
  bool operator==(const KinkProbe&) const = default;
};

KinkProbe* active_kink_probe();

class ScopedKinkProbe {
 public:
  explicit ScopedKinkProbe(KinkProbe& probe);
  ~ScopedKinkProbe();
  ScopedKinkProbe(const ScopedKinkProbe&) = delete;
  ScopedKinkProbe& operator=(const ScopedKinkProbe&) = delete;

 private:
  KinkProbe* previous_;
};

namespace detail {

/// Builds an op result. The backward closure is attached only when gradients
/// are enabled and some parent needs one.
template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> values,
                           std::vector<std::shared_ptr<TensorNode<T>>> parents,
                           std::function<void(TensorNode<T>&)> backward_fn);

}  // namespace detail

}  // namespace ldmdn
