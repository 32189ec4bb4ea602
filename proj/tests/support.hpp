#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ldmdn/rng.hpp"
#include "ldmdn/tensor.hpp"

namespace ldmdn::test {

template <typename T = double>
BasicTensor<T> random_tensor(Shape shape, std::uint64_t& rng, double lo = -1.0, double hi = 1.0,
                             bool requires_grad = false) {
  std::vector<T> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<T>(uniform(rng, lo, hi));
  return BasicTensor<T>::from_data(std::move(shape), std::move(v), requires_grad);
}

/// Reference cross-correlation with zero padding, straight from the definition.
inline std::vector<double> naive_conv2d(const std::vector<double>& x, const Shape& xs, const std::vector<double>& k,
                                        const Shape& ks, int stride, int pad, Shape* out_shape) {
  const auto n = xs[0], c = xs[1], h = xs[2], w = xs[3];
  const auto f = ks[0], kh = ks[2], kw = ks[3];
  const auto ho = (h + 2 * pad - kh) / stride + 1, wo = (w + 2 * pad - kw) / stride + 1;
  *out_shape = {n, f, ho, wo};
  std::vector<double> out(static_cast<std::size_t>(n * f * ho * wo), 0.0);
  for (std::int64_t b = 0; b < n; ++b)
    for (std::int64_t o = 0; o < f; ++o)
      for (std::int64_t i = 0; i < ho; ++i)
        for (std::int64_t j = 0; j < wo; ++j) {
          double acc = 0.0;
          for (std::int64_t ch = 0; ch < c; ++ch)
            for (std::int64_t a = 0; a < kh; ++a)
              for (std::int64_t bb = 0; bb < kw; ++bb) {
                const auto yi = i * stride - pad + a, xj = j * stride - pad + bb;
                if (yi < 0 || yi >= h || xj < 0 || xj >= w) continue;
                acc += x[((b * c + ch) * h + yi) * w + xj] * k[((o * c + ch) * kh + a) * kw + bb];
              }
          out[((b * f + o) * ho + i) * wo + j] = acc;
        }
  return out;
}

struct GradCheckResult {
  double max_rel_error = 0.0;  // worst norm-wise relative error over parameter tensors
  double rel_error = 0.0;      // norm-wise relative error over all checked coordinates
  int checked = 0;             // coordinates compared
  int skipped = 0;             // coordinates whose stencil crossed a kink
};

/// Central differences of `loss` against the accumulated autodiff gradient for
/// up to `per_tensor` seeded coordinates of each parameter. Coordinates whose
/// +-h evaluations land on a different side of any kink are excluded.
inline GradCheckResult check_gradients(const std::vector<TensorD>& params, const std::function<TensorD()>& loss,
                                       double h, int per_tensor, std::uint64_t seed) {
  for (auto p : params) p.zero_grad();
  KinkProbe base;
  {
    ScopedKinkProbe scope(base);
    backward(loss());
  }
  GradCheckResult res;
  std::uint64_t rng = seed;
  double all_diff2 = 0.0, all_fd2 = 0.0, all_ad2 = 0.0;
  for (auto p : params) {
    std::vector<std::size_t> coords(p.numel());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    shuffle(coords, rng);
    if (per_tensor > 0 && coords.size() > static_cast<std::size_t>(per_tensor)) coords.resize(per_tensor);
    double diff2 = 0.0, fd2 = 0.0, ad2 = 0.0;
    for (auto i : coords) {
      const double orig = p[i];
      KinkProbe plus, minus;
      double fp, fm;
      {
        NoGradGuard ng;
        p[i] = orig + h;
        {
          ScopedKinkProbe scope(plus);
          fp = loss().item();
        }
        p[i] = orig - h;
        {
          ScopedKinkProbe scope(minus);
          fm = loss().item();
        }
        p[i] = orig;
      }
      if (!(plus == base) || !(minus == base)) {
        ++res.skipped;
        continue;
      }
      const double fd = (fp - fm) / (2.0 * h);
      const double ad = p.grad()[i];
      diff2 += (fd - ad) * (fd - ad);
      fd2 += fd * fd;
      ad2 += ad * ad;
      ++res.checked;
    }
    const double scale = std::max({std::sqrt(fd2), std::sqrt(ad2), 1e-12});
    res.max_rel_error = std::max(res.max_rel_error, std::sqrt(diff2) / scale);
    all_diff2 += diff2;
    all_fd2 += fd2;
    all_ad2 += ad2;
  }
  res.rel_error = std::sqrt(all_diff2) / std::max({std::sqrt(all_fd2), std::sqrt(all_ad2), 1e-12});
  return res;
}

}  // namespace ldmdn::test
