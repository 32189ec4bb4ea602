#include "ldmdn/recover.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ldmdn/rng.hpp"

namespace ldmdn {

void RecoverConfig::validate() const {
  if (patch < 1) throw std::invalid_argument("recover: patch must be >= 1");
  if (stride < 1) throw std::invalid_argument("recover: stride must be >= 1");
  if (!(mu_bar > 0.0)) throw std::invalid_argument("recover: mu_bar must be > 0");
  if (!(bandwidth >= 0.0)) throw std::invalid_argument("recover: bandwidth must be >= 0");
  if (knn < 0) throw std::invalid_argument("recover: knn must be >= 0");
  if (max_iterations < 1) throw std::invalid_argument("recover: max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw std::invalid_argument("recover: tolerance must be > 0");
}

namespace {

void check_inputs(const Image& observed, const Mask& known) {
  if (known.rows() != observed.rows() || known.cols() != observed.cols()) {
    throw std::invalid_argument("recover: mask shape differs from the image");
  }
  if (!known.any()) throw std::invalid_argument("recover: the known-pixel set is empty");
}

// Least-squares image from (possibly inconsistent) patches: each pixel is the
// mean of every patch entry covering it. Inverse of image_patches.
Image assemble(const Eigen::MatrixXd& patches, Eigen::Index h, Eigen::Index w, int patch, int step) {
  Image acc = Image::Zero(h, w);
  Image cnt = Image::Zero(h, w);
  const auto cols = w / step;
  for (Eigen::Index r = 0; r < patches.rows(); ++r) {
    const auto a = r / cols, b = r % cols;
    for (int py = 0; py < patch; ++py)
      for (int px = 0; px < patch; ++px) {
        const auto i = (a * step + py) % h, j = (b * step + px) % w;
        acc(i, j) += patches(r, py * patch + px);
        cnt(i, j) += 1.0;
      }
  }
  return acc.cwiseQuotient(cnt);
}

}  // namespace

Image mean_fill(const Image& observed, const Mask& known) {
  check_inputs(observed, known);
  double total = 0.0;
  for (Eigen::Index i = 0; i < observed.rows(); ++i)
    for (Eigen::Index j = 0; j < observed.cols(); ++j)
      if (known(i, j)) total += observed(i, j);
  const double mean = total / static_cast<double>(known.count());
  Image out = observed;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      if (!known(i, j)) out(i, j) = mean;
  return out;
}

RecoverResult recover_image(const Image& observed, const Mask& known, const RecoverConfig& cfg) {
  cfg.validate();
  check_inputs(observed, known);
  RecoverResult res;
  res.image = mean_fill(observed, known);
  if (known.all()) return res;

  const auto h = observed.rows(), w = observed.cols();
  Eigen::MatrixXd dual;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Eigen::MatrixXd p = image_patches(res.image, cfg.patch, cfg.stride);
    if (dual.size() == 0) dual = Eigen::MatrixXd::Zero(p.rows(), p.cols());
    KernelConfig kc;
    kc.t = cfg.bandwidth > 0.0 ? cfg.bandwidth : median_bandwidth(p);
    kc.mu_bar = cfg.mu_bar;
    kc.knn = cfg.knn;
    const auto ops = gaussian_weights(p, kc);
    const Eigen::MatrixXd u = solve_coordinates(ops, p - dual, kc);

    Image next = assemble(u + dual, h, w, cfg.patch, cfg.stride);
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j)
        if (known(i, j)) next(i, j) = observed(i, j);

    dual += u - image_patches(next, cfg.patch, cfg.stride);
    const double denom = std::max(res.image.norm(), 1e-300);
    res.last_change = (next - res.image).norm() / denom;
    res.changes.push_back(res.last_change);
    res.image = next;
    res.iterations = it + 1;
    if (res.last_change < cfg.tolerance) break;
  }
  return res;
}

Mask random_mask(int h, int w, double fraction, std::uint64_t seed) {
  if (h < 1 || w < 1) throw std::invalid_argument("random_mask: bad extents");
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("random_mask: fraction must be in [0,1]");
  std::vector<std::size_t> order(static_cast<std::size_t>(h) * static_cast<std::size_t>(w));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t rng = seed ^ 0x6d61736b6d61736bULL;
  shuffle(order, rng);
  const auto n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(order.size())));
  Mask m = Mask::Constant(h, w, false);
  for (std::size_t k = 0; k < n; ++k) m(static_cast<Eigen::Index>(order[k] / w), static_cast<Eigen::Index>(order[k] % w)) = true;
  return m;
}

}  // namespace ldmdn
