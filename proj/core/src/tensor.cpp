#include "ldmdn/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace ldmdn {

namespace {
thread_local bool g_grad_enabled = true;
thread_local KinkProbe* g_kink_probe = nullptr;
}  // namespace

std::int64_t shape_numel(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw std::invalid_argument("negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

KinkProbe* active_kink_probe() { return g_kink_probe; }

ScopedKinkProbe::ScopedKinkProbe(KinkProbe& probe) : previous_(g_kink_probe) { g_kink_probe = &probe; }
ScopedKinkProbe::~ScopedKinkProbe() { g_kink_probe = previous_; }

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value, bool requires_grad) {
  auto n = static_cast<std::size_t>(shape_numel(shape));
  return from_data(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from_data(Shape shape, std::vector<T> values, bool requires_grad) {
  if (static_cast<std::size_t>(shape_numel(shape)) != values.size()) {
    throw std::invalid_argument("tensor shape " + shape_str(shape) + " does not match " +
                                std::to_string(values.size()) + " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->ensure_grad();
  return BasicTensor(std::move(node));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

template <typename T>
void BasicTensor<T>::set_requires_grad(bool flag) {
  if (!node_->leaf) throw std::logic_error("requires_grad can only be set on leaf tensors");
  node_->requires_grad = flag;
  if (flag) {
    node_->ensure_grad();
  } else {
    node_->grad.clear();
  }
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  if (node_->requires_grad) {
    node_->grad.assign(node_->data.size(), T(0));
  }
}

template <typename T>
T BasicTensor<T>::item() const {
  if (node_->data.size() != 1) {
    throw std::invalid_argument("item() on tensor of shape " + shape_str(node_->shape));
  }
  return node_->data[0];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from_data(node_->shape, node_->data, false);
}

template <typename T>
void backward(const BasicTensor<T>& loss) {
  using Node = TensorNode<T>;
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss, got shape " +
                                (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) {
    if (!node->leaf) node->grad.assign(node->data.size(), T(0));
  }
  root->ensure_grad();
  root->grad[0] += T(1);

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (!node->leaf && node->backward_fn) {
      for (auto& parent : node->parents) {
        if (parent->requires_grad) parent->ensure_grad();
      }
      node->backward_fn(*node);
    }
  }
}

namespace detail {

template <typename T>
BasicTensor<T> make_result(Shape shape, std::vector<T> values,
                           std::vector<std::shared_ptr<TensorNode<T>>> parents,
                           std::function<void(TensorNode<T>&)> backward_fn) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->leaf = false;
  bool needs = false;
  if (g_grad_enabled) {
    needs = std::any_of(parents.begin(), parents.end(),
                        [](const auto& p) { return p && p->requires_grad; });
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return BasicTensor<T>(std::move(node));
}

template BasicTensor<float> make_result(Shape, std::vector<float>,
                                        std::vector<std::shared_ptr<TensorNode<float>>>,
                                        std::function<void(TensorNode<float>&)>);
template BasicTensor<double> make_result(Shape, std::vector<double>,
                                         std::vector<std::shared_ptr<TensorNode<double>>>,
                                         std::function<void(TensorNode<double>&)>);

}  // namespace detail

template class BasicTensor<float>;
template class BasicTensor<double>;
template void backward(const BasicTensor<float>&);
template void backward(const BasicTensor<double>&);

}  // namespace ldmdn
