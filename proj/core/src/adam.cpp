#include "ldmdn/adam.hpp"

#include <algorithm>
#include <cmath>

namespace ldmdn {

template <typename T>
BasicTensor<T> BasicParameterStore<T>::add(std::string name, BasicTensor<T> init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  init.set_requires_grad(true);
  Entry e{std::move(name), init, std::vector<double>(init.numel(), 0.0), std::vector<double>(init.numel(), 0.0)};
  entries_.push_back(std::move(e));
  return init;
}

template <typename T>
const BasicTensor<T>& BasicParameterStore<T>::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.value;
  throw std::out_of_range("unknown parameter '" + name + "'");
}

template <typename T>
bool BasicParameterStore<T>::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; });
}

template <typename T>
std::size_t BasicParameterStore<T>::total_elements() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

template <typename T>
void BasicParameterStore<T>::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

template <typename T>
void BasicParameterStore<T>::adam_step(const AdamConfig& cfg) {
  for (const auto& e : entries_) {
    auto g = e.value.grad();
    if (g.size() != e.value.numel()) throw std::logic_error("parameter '" + e.name + "' has no gradient buffer");
    for (auto x : g)
      if (std::isnan(x)) throw NonFiniteGradient(e.name);
  }
  ++step_;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_));
  for (auto& e : entries_) {
    auto p = e.value.data();
    auto g = e.value.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      e.m[i] = cfg.beta1 * e.m[i] + (1.0 - cfg.beta1) * gi;
      e.v[i] = cfg.beta2 * e.v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = e.m[i] / c1;
      const double vhat = e.v[i] / c2;
      p[i] = static_cast<T>(p[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
    }
  }
}

template <typename T>
BasicParameterStore<T> BasicParameterStore<T>::clone() const {
  BasicParameterStore out;
  out.step_ = step_;
  for (const auto& e : entries_) {
    auto copy = e.value.detach();
    copy.set_requires_grad(true);
    out.entries_.push_back(Entry{e.name, copy, e.m, e.v});
  }
  return out;
}

template <typename T>
void BasicParameterStore<T>::assign_from(const BasicParameterStore& other) {
  if (other.entries_.size() != entries_.size()) throw std::invalid_argument("parameter store layout mismatch");
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    auto& dst = entries_[k];
    const auto& src = other.entries_[k];
    if (dst.name != src.name || dst.value.shape() != src.value.shape()) {
      throw std::invalid_argument("parameter store layout mismatch at '" + dst.name + "'");
    }
    std::copy(src.value.data().begin(), src.value.data().end(), dst.value.data().begin());
    dst.m = src.m;
    dst.v = src.v;
  }
  step_ = other.step_;
}

template class BasicParameterStore<float>;
template class BasicParameterStore<double>;

}  // namespace ldmdn
