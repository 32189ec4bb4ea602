#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldmdn/tensor.hpp"

namespace ldmdn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Raised when a gradient holds a NaN; nothing was updated.
class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(std::string parameter)
      : std::runtime_error("non-finite gradient in parameter '" + parameter + "'"), parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

/// Named trainable tensors plus their Adam moments.
template <typename T>
class BasicParameterStore {
 public:
  struct Entry {
    std::string name;
    BasicTensor<T> value;
    std::vector<double> m;
    std::vector<double> v;
  };

  /// Registers a parameter (marked requires_grad) and returns a handle to it.
  BasicTensor<T> add(std::string name, BasicTensor<T> init);

  const BasicTensor<T>& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t total_elements() const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }

  std::int64_t step_count() const { return step_; }
  void zero_grad();

  /// One bias-corrected Adam update from the currently accumulated gradients.
  /// Gradients are left in place.
  void adam_step(const AdamConfig& cfg);

  /// Deep copy of values and optimizer state.
  BasicParameterStore clone() const;
  /// Copies values and optimizer state from a store with identical layout.
  void assign_from(const BasicParameterStore& other);

 private:
  std::vector<Entry> entries_;
  std::int64_t step_ = 0;
};

using ParameterStore = BasicParameterStore<float>;

template <typename T>
void adam_step(BasicParameterStore<T>& params, const AdamConfig& cfg) {
  params.adam_step(cfg);
}

}  // namespace ldmdn
