#include "ldmdn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ldmdn {

namespace {

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

// Geometry shared by the three correlation kernels: a "source" plane of
// src_h x src_w correlated with a kh x kw kernel produces a dst_h x dst_w plane.
struct CorrGeometry {
  std::int64_t batch, src_c, src_h, src_w;
  std::int64_t dst_c, dst_h, dst_w;
  std::int64_t kh, kw;
  std::int64_t stride, pad;

  // Destination index range [lo, hi] whose source index d*stride - pad + k is in [0, extent).
  void valid_range(std::int64_t k, std::int64_t src_extent, std::int64_t dst_extent, std::int64_t& lo,
                   std::int64_t& hi) const {
    lo = std::max<std::int64_t>(0, ceil_div(pad - k, stride));
    hi = std::min<std::int64_t>(dst_extent - 1, floor_div(src_extent - 1 + pad - k, stride));
  }
};

// dst[n,o] += sum_i src[n,i] (*) kernel[o,i]
template <typename T>
void corr_forward(const CorrGeometry& g, const T* src, const T* kernel, T* dst) {
  const std::int64_t src_plane = g.src_h * g.src_w;
  const std::int64_t dst_plane = g.dst_h * g.dst_w;
  for (std::int64_t n = 0; n < g.batch; ++n) {
    for (std::int64_t o = 0; o < g.dst_c; ++o) {
      T* out = dst + (n * g.dst_c + o) * dst_plane;
      for (std::int64_t i = 0; i < g.src_c; ++i) {
        const T* in = src + (n * g.src_c + i) * src_plane;
        const T* k = kernel + (o * g.src_c + i) * g.kh * g.kw;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          std::int64_t oy_lo, oy_hi;
          g.valid_range(ky, g.src_h, g.dst_h, oy_lo, oy_hi);
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            std::int64_t ox_lo, ox_hi;
            g.valid_range(kx, g.src_w, g.dst_w, ox_lo, ox_hi);
            const T w = k[ky * g.kw + kx];
            for (std::int64_t oy = oy_lo; oy <= oy_hi; ++oy) {
              T* orow = out + oy * g.dst_w;
              const T* irow = in + (oy * g.stride - g.pad + ky) * g.src_w;
              if (g.stride == 1) {
                const T* ishift = irow - g.pad + kx;
                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) orow[ox] += w * ishift[ox];
              } else {
                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) {
                  orow[ox] += w * irow[ox * g.stride - g.pad + kx];
                }
              }
            }
          }
        }
      }
    }
  }
}

// src[n,i] += sum_o dst[n,o] (*)^T kernel[o,i]  (adjoint of corr_forward in src)
template <typename T>
void corr_adjoint(const CorrGeometry& g, const T* dst, const T* kernel, T* src) {
  const std::int64_t src_plane = g.src_h * g.src_w;
  const std::int64_t dst_plane = g.dst_h * g.dst_w;
  for (std::int64_t n = 0; n < g.batch; ++n) {
    for (std::int64_t i = 0; i < g.src_c; ++i) {
      T* in = src + (n * g.src_c + i) * src_plane;
      for (std::int64_t o = 0; o < g.dst_c; ++o) {
        const T* out = dst + (n * g.dst_c + o) * dst_plane;
        const T* k = kernel + (o * g.src_c + i) * g.kh * g.kw;
        for (std::int64_t ky = 0; ky < g.kh; ++ky) {
          std::int64_t oy_lo, oy_hi;
          g.valid_range(ky, g.src_h, g.dst_h, oy_lo, oy_hi);
          for (std::int64_t kx = 0; kx < g.kw; ++kx) {
            std::int64_t ox_lo, ox_hi;
            g.valid_range(kx, g.src_w, g.dst_w, ox_lo, ox_hi);
            const T w = k[ky * g.kw + kx];
            for (std::int64_t oy = oy_lo; oy <= oy_hi; ++oy) {
              const T* orow = out + oy * g.dst_w;
              T* irow = in + (oy * g.stride - g.pad + ky) * g.src_w;
              if (g.stride == 1) {
                T* ishift = irow - g.pad + kx;
                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) ishift[ox] += w * orow[ox];
              } else {
                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) {
                  irow[ox * g.stride - g.pad + kx] += w * orow[ox];
                }
              }
            }
          }
        }
      }
    }
  }
}

// kernel_grad[o,i] += sum_n src[n,i] (*) dst[n,o]
template <typename T>
void corr_kernel_grad(const CorrGeometry& g, const T* src, const T* dst, T* kernel_grad) {
  const std::int64_t src_plane = g.src_h * g.src_w;
  const std::int64_t dst_plane = g.dst_h * g.dst_w;
  for (std::int64_t o = 0; o < g.dst_c; ++o) {
    for (std::int64_t i = 0; i < g.src_c; ++i) {
      T* kg = kernel_grad + (o * g.src_c + i) * g.kh * g.kw;
      for (std::int64_t ky = 0; ky < g.kh; ++ky) {
        std::int64_t oy_lo, oy_hi;
        g.valid_range(ky, g.src_h, g.dst_h, oy_lo, oy_hi);
        for (std::int64_t kx = 0; kx < g.kw; ++kx) {
          std::int64_t ox_lo, ox_hi;
          g.valid_range(kx, g.src_w, g.dst_w, ox_lo, ox_hi);
          T acc = 0;
          for (std::int64_t n = 0; n < g.batch; ++n) {
            const T* in = src + (n * g.src_c + i) * src_plane;
            const T* out = dst + (n * g.dst_c + o) * dst_plane;
            for (std::int64_t oy = oy_lo; oy <= oy_hi; ++oy) {
              const T* orow = out + oy * g.dst_w;
              const T* irow = in + (oy * g.stride - g.pad + ky) * g.src_w;
              if (g.stride == 1) {
                const T* ishift = irow - g.pad + kx;
                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) acc += orow[ox] * ishift[ox];
              } else {
                for (std::int64_t ox = ox_lo; ox <= ox_hi; ++ox) {
                  acc += orow[ox] * irow[ox * g.stride - g.pad + kx];
                }
              }
            }
          }
          kg[ky * g.kw + kx] += acc;
        }
      }
    }
  }
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (!a.defined() || !b.defined()) throw std::invalid_argument(std::string(op) + ": undefined operand");
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
}

template <typename T>
void require_rank4(const BasicTensor<T>& t, const char* op, const char* what) {
  if (!t.defined() || t.rank() != 4) {
    throw std::invalid_argument(std::string(op) + ": " + what + " must be rank 4 [N,C,H,W], got " +
                                (t.defined() ? shape_str(t.shape()) : std::string("<undefined>")));
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel, int stride, int padding) {
  require_rank4(input, "conv2d", "input");
  require_rank4(kernel, "conv2d", "kernel");
  if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv2d: padding must be >= 0");
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  if (is[1] != ks[1]) {
    throw std::invalid_argument("conv2d: channel dimension (axis 1) mismatch: input has " +
                                std::to_string(is[1]) + ", kernel expects " + std::to_string(ks[1]));
  }
  if (ks[2] > is[2] + 2 * padding) {
    throw std::invalid_argument("conv2d: kernel height " + std::to_string(ks[2]) +
                                " exceeds padded input height " + std::to_string(is[2] + 2 * padding));
  }
  if (ks[3] > is[3] + 2 * padding) {
    throw std::invalid_argument("conv2d: kernel width " + std::to_string(ks[3]) +
                                " exceeds padded input width " + std::to_string(is[3] + 2 * padding));
  }
  CorrGeometry g{is[0], is[1], is[2], is[3], ks[0], (is[2] + 2 * padding - ks[2]) / stride + 1,
                 (is[3] + 2 * padding - ks[3]) / stride + 1, ks[2], ks[3], stride, padding};
  Shape out_shape{g.batch, g.dst_c, g.dst_h, g.dst_w};
  std::vector<T> out(static_cast<std::size_t>(shape_numel(out_shape)), T(0));
  corr_forward(g, input.data().data(), kernel.data().data(), out.data());

  auto in_node = input.node();
  auto k_node = kernel.node();
  return detail::make_result<T>(std::move(out_shape), std::move(out), {in_node, k_node},
                                [g, in_node, k_node](TensorNode<T>& self) {
                                  if (in_node->requires_grad) {
                                    corr_adjoint(g, self.grad.data(), k_node->data.data(), in_node->grad.data());
                                  }
                                  if (k_node->requires_grad) {
                                    corr_kernel_grad(g, in_node->data.data(), self.grad.data(),
                                                     k_node->grad.data());
                                  }
                                });
}

template <typename T>
BasicTensor<T> conv_transpose2d(const BasicTensor<T>& input, const BasicTensor<T>& kernel, int stride,
                                int padding) {
  require_rank4(input, "conv_transpose2d", "input");
  require_rank4(kernel, "conv_transpose2d", "kernel");
  if (stride < 1) throw std::invalid_argument("conv_transpose2d: stride must be >= 1");
  if (padding < 0) throw std::invalid_argument("conv_transpose2d: padding must be >= 0");
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  if (is[1] != ks[0]) {
    throw std::invalid_argument("conv_transpose2d: channel dimension (axis 1) mismatch: input has " +
                                std::to_string(is[1]) + ", kernel expects " + std::to_string(ks[0]));
  }
  const std::int64_t out_h = (is[2] - 1) * stride - 2 * padding + ks[2];
  const std::int64_t out_w = (is[3] - 1) * stride - 2 * padding + ks[3];
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("conv_transpose2d: padding too large for spatial extent " +
                                shape_str(is));
  }
  // Viewed as the adjoint of a conv2d whose input is our output.
  CorrGeometry g{is[0], ks[1], out_h, out_w, ks[0], is[2], is[3], ks[2], ks[3], stride, padding};
  Shape out_shape{is[0], ks[1], out_h, out_w};
  std::vector<T> out(static_cast<std::size_t>(shape_numel(out_shape)), T(0));
  corr_adjoint(g, input.data().data(), kernel.data().data(), out.data());

  auto in_node = input.node();
  auto k_node = kernel.node();
  return detail::make_result<T>(std::move(out_shape), std::move(out), {in_node, k_node},
                                [g, in_node, k_node](TensorNode<T>& self) {
                                  if (in_node->requires_grad) {
                                    corr_forward(g, self.grad.data(), k_node->data.data(), in_node->grad.data());
                                  }
                                  if (k_node->requires_grad) {
                                    corr_kernel_grad(g, self.grad.data(), in_node->data.data(),
                                                     k_node->grad.data());
                                  }
                                });
}

template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& input, const BasicTensor<T>& bias) {
  require_rank4(input, "add_bias", "input");
  if (bias.rank() != 1 || bias.dim(0) != input.dim(1)) {
    throw std::invalid_argument("add_bias: bias shape " + shape_str(bias.shape()) +
                                " does not match channel dimension (axis 1) " + std::to_string(input.dim(1)));
  }
  const auto n = input.dim(0), c = input.dim(1), plane = input.dim(2) * input.dim(3);
  std::vector<T> out(input.data().begin(), input.data().end());
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T v = bias[ch];
      T* p = out.data() + (b * c + ch) * plane;
      for (std::int64_t i = 0; i < plane; ++i) p[i] += v;
    }
  auto in_node = input.node();
  auto b_node = bias.node();
  return detail::make_result<T>(input.shape(), std::move(out), {in_node, b_node},
                                [in_node, b_node, n, c, plane](TensorNode<T>& self) {
                                  if (in_node->requires_grad) {
                                    for (std::size_t i = 0; i < self.grad.size(); ++i) in_node->grad[i] += self.grad[i];
                                  }
                                  if (b_node->requires_grad) {
                                    for (std::int64_t b = 0; b < n; ++b)
                                      for (std::int64_t ch = 0; ch < c; ++ch) {
                                        const T* g = self.grad.data() + (b * c + ch) * plane;
                                        double acc = 0.0;
                                        for (std::int64_t i = 0; i < plane; ++i) acc += g[i];
                                        b_node->grad[ch] += static_cast<T>(acc);
                                      }
                                  }
                                });
}

template <typename T>
BasicTensor<T> leaky_relu(const BasicTensor<T>& x, double slope) {
  const T a = static_cast<T>(slope);
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = in[i] > T(0) ? in[i] : a * in[i];
  if (KinkProbe* probe = active_kink_probe()) {
    for (auto v : in) probe->record(v > T(0));
  }
  auto node = x.node();
  return detail::make_result<T>(x.shape(), std::move(out), {node}, [node, a](TensorNode<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      node->grad[i] += node->data[i] > T(0) ? self.grad[i] : a * self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& x) {
  std::vector<T> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(in[i]);
  auto node = x.node();
  return detail::make_result<T>(x.shape(), std::move(out), {node}, [node](TensorNode<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T y = self.data[i];
      node->grad[i] += self.grad[i] * (T(1) - y * y);
    }
  });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  auto na = a.node(), nb = b.node();
  return detail::make_result<T>(a.shape(), std::move(out), {na, nb}, [na, nb](TensorNode<T>& self) {
    if (na->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) na->grad[i] += self.grad[i];
    if (nb->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) nb->grad[i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  auto na = a.node(), nb = b.node();
  return detail::make_result<T>(a.shape(), std::move(out), {na, nb}, [na, nb](TensorNode<T>& self) {
    if (na->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) na->grad[i] += self.grad[i];
    if (nb->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) nb->grad[i] -= self.grad[i];
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  auto na = a.node(), nb = b.node();
  return detail::make_result<T>(a.shape(), std::move(out), {na, nb}, [na, nb](TensorNode<T>& self) {
    if (na->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) na->grad[i] += self.grad[i] * nb->data[i];
    if (nb->requires_grad)
      for (std::size_t i = 0; i < self.grad.size(); ++i) nb->grad[i] += self.grad[i] * na->data[i];
  });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor) {
  const T f = static_cast<T>(factor);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * f;
  auto na = a.node();
  return detail::make_result<T>(a.shape(), std::move(out), {na}, [na, f](TensorNode<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) na->grad[i] += self.grad[i] * f;
  });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  double acc = 0.0;
  for (auto v : a.data()) acc += v;
  auto na = a.node();
  return detail::make_result<T>({}, {static_cast<T>(acc)}, {na}, [na](TensorNode<T>& self) {
    const T g = self.grad[0];
    for (auto& v : na->grad) v += g;
  });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  if (a.numel() == 0) throw std::invalid_argument("mean of empty tensor");
  double acc = 0.0;
  for (auto v : a.data()) acc += v;
  const double n = static_cast<double>(a.numel());
  auto na = a.node();
  return detail::make_result<T>({}, {static_cast<T>(acc / n)}, {na}, [na, n](TensorNode<T>& self) {
    const T g = static_cast<T>(self.grad[0] / n);
    for (auto& v : na->grad) v += g;
  });
}

template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "l1_loss");
  if (a.numel() == 0) throw std::invalid_argument("l1_loss of empty tensors");
  double acc = 0.0;
  KinkProbe* probe = active_kink_probe();
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const T d = a[i] - b[i];
    acc += std::abs(static_cast<double>(d));
    if (probe) probe->record(d > T(0));
  }
  const double n = static_cast<double>(a.numel());
  auto na = a.node(), nb = b.node();
  return detail::make_result<T>({}, {static_cast<T>(acc / n)}, {na, nb}, [na, nb, n](TensorNode<T>& self) {
    const T g = static_cast<T>(self.grad[0] / n);
    for (std::size_t i = 0; i < na->data.size(); ++i) {
      const T d = na->data[i] - nb->data[i];
      const T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
      if (na->requires_grad) na->grad[i] += s;
      if (nb->requires_grad) nb->grad[i] -= s;
    }
  });
}

template <typename T>
BasicTensor<T> mse_loss(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mse_loss");
  if (a.numel() == 0) throw std::invalid_argument("mse_loss of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  const double n = static_cast<double>(a.numel());
  auto na = a.node(), nb = b.node();
  return detail::make_result<T>({}, {static_cast<T>(acc / n)}, {na, nb}, [na, nb, n](TensorNode<T>& self) {
    const T g = static_cast<T>(2.0 * self.grad[0] / n);
    for (std::size_t i = 0; i < na->data.size(); ++i) {
      const T s = g * (na->data[i] - nb->data[i]);
      if (na->requires_grad) na->grad[i] += s;
      if (nb->requires_grad) nb->grad[i] -= s;
    }
  });
}

template <typename T>
BasicTensor<T> frobenius_sq(const BasicTensor<T>& a) {
  double acc = 0.0;
  for (auto v : a.data()) acc += static_cast<double>(v) * static_cast<double>(v);
  auto na = a.node();
  return detail::make_result<T>({}, {static_cast<T>(acc)}, {na}, [na](TensorNode<T>& self) {
    const T g = T(2) * self.grad[0];
    for (std::size_t i = 0; i < na->data.size(); ++i) na->grad[i] += g * na->data[i];
  });
}

template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_rank4(a, "concat_channels", "first operand");
  require_rank4(b, "concat_channels", "second operand");
  for (std::size_t axis : {0u, 2u, 3u}) {
    if (a.dim(axis) != b.dim(axis)) {
      throw std::invalid_argument("concat_channels: axis " + std::to_string(axis) + " mismatch " +
                                  shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
  }
  const auto n = a.dim(0), ca = a.dim(1), cb = b.dim(1), plane = a.dim(2) * a.dim(3);
  Shape shape{n, ca + cb, a.dim(2), a.dim(3)};
  std::vector<T> out(static_cast<std::size_t>(shape_numel(shape)));
  for (std::int64_t i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + i * ca * plane, ca * plane, out.data() + i * (ca + cb) * plane);
    std::copy_n(b.data().data() + i * cb * plane, cb * plane, out.data() + (i * (ca + cb) + ca) * plane);
  }
  auto na = a.node(), nb = b.node();
  return detail::make_result<T>(std::move(shape), std::move(out), {na, nb},
                                [na, nb, n, ca, cb, plane](TensorNode<T>& self) {
                                  for (std::int64_t i = 0; i < n; ++i) {
                                    const T* g = self.grad.data() + i * (ca + cb) * plane;
                                    if (na->requires_grad) {
                                      T* d = na->grad.data() + i * ca * plane;
                                      for (std::int64_t j = 0; j < ca * plane; ++j) d[j] += g[j];
                                    }
                                    if (nb->requires_grad) {
                                      T* d = nb->grad.data() + i * cb * plane;
                                      for (std::int64_t j = 0; j < cb * plane; ++j) d[j] += g[ca * plane + j];
                                    }
                                  }
                                });
}

template <typename T>
BasicTensor<T> concat_rows(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    throw std::invalid_argument("concat_rows: trailing extents differ " + shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
  }
  Shape shape = a.shape();
  shape[0] += b.dim(0);
  std::vector<T> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  auto na = a.node(), nb = b.node();
  return detail::make_result<T>(std::move(shape), std::move(out), {na, nb}, [na, nb](TensorNode<T>& self) {
    const std::size_t split = na->data.size();
    if (na->requires_grad)
      for (std::size_t i = 0; i < split; ++i) na->grad[i] += self.grad[i];
    if (nb->requires_grad)
      for (std::size_t i = 0; i < nb->data.size(); ++i) nb->grad[i] += self.grad[split + i];
  });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape) {
  if (static_cast<std::size_t>(shape_numel(shape)) != a.numel()) {
    throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  auto na = a.node();
  return detail::make_result<T>(std::move(shape), std::move(out), {na}, [na](TensorNode<T>& self) {
    for (std::size_t i = 0; i < self.grad.size(); ++i) na->grad[i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> full_like(const BasicTensor<T>& a, T value) {
  return BasicTensor<T>::full(a.shape(), value);
}

#define LDMDN_INSTANTIATE_OPS(T)                                                              \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&, int, int);     \
  template BasicTensor<T> conv_transpose2d(const BasicTensor<T>&, const BasicTensor<T>&, int, \
                                           int);                                              \
  template BasicTensor<T> add_bias(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> leaky_relu(const BasicTensor<T>&, double);                          \
  template BasicTensor<T> tanh(const BasicTensor<T>&);                                        \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> scale(const BasicTensor<T>&, double);                               \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                         \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                        \
  template BasicTensor<T> l1_loss(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> mse_loss(const BasicTensor<T>&, const BasicTensor<T>&);             \
  template BasicTensor<T> frobenius_sq(const BasicTensor<T>&);                                \
  template BasicTensor<T> concat_channels(const BasicTensor<T>&, const BasicTensor<T>&);      \
  template BasicTensor<T> concat_rows(const BasicTensor<T>&, const BasicTensor<T>&);          \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                              \
  template BasicTensor<T> full_like(const BasicTensor<T>&, T);

LDMDN_INSTANTIATE_OPS(float)
LDMDN_INSTANTIATE_OPS(double)

#undef LDMDN_INSTANTIATE_OPS

}  // namespace ldmdn
