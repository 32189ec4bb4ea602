#pragma once

#include "ldmdn/tensor.hpp"

namespace ldmdn {

inline constexpr double kLeakySlope = 0.2;

// Convolutions use NCHW activations.

/// Cross-correlation. input [N,C,H,W], kernel [F,C,kh,kw] -> [N,F,H',W'] with
/// H' = floor((H + 2*padding - kh)/stride) + 1.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel, int stride = 1,
                      int padding = 0);

/// Adjoint of conv2d. input [N,C,H,W], kernel [C,F,kh,kw] -> [N,F,H',W'] with
/// H' = (H-1)*stride - 2*padding + kh.
template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                                int stride = 1, int padding = 0);

/// Adds bias[c] to every element of channel c.
template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& input, const BasicTensor<T>& bias);

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, double slope = kLeakySlope);

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor);

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a);

/// mean(|a - b|)
template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// mean((a - b)^2)
template <typename T>
BasicTensor<T> mse_loss(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// sum(a^2)
template <typename T>
BasicTensor<T> frobenius_sq(const BasicTensor<T>& a);

/// Concatenates along axis 1 of [N,C,H,W] tensors.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Concatenates along axis 0; all trailing extents must agree.
template <typename T>
BasicTensor<T> concat_rows(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Same values, new shape (numel must agree).
template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape);

template <typename T>
BasicTensor<T> full_like(const BasicTensor<T>& a, T value);

}  // namespace ldmdn
