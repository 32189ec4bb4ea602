#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ldmdn/ct.hpp"

namespace ldmdn {

namespace {

void check_same(const Image& a, const Image& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": shapes differ (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  }
  if (a.size() == 0) throw std::invalid_argument(std::string(what) + ": empty images");
}

constexpr int kSsimWindow = 8;

}  // namespace

double psnr(const Image& a, const Image& b, double peak) {
  check_same(a, b, "psnr");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be > 0");
  const double mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrInfinity;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Image& a, const Image& b, double peak) {
  check_same(a, b, "ssim");
  if (!(peak > 0.0)) throw std::invalid_argument("ssim: peak must be > 0");
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const auto wh = std::min<Eigen::Index>(kSsimWindow, a.rows());
  const auto ww = std::min<Eigen::Index>(kSsimWindow, a.cols());
  const double n = static_cast<double>(wh * ww);
  double total = 0.0;
  std::int64_t windows = 0;
  for (Eigen::Index i = 0; i + wh <= a.rows(); ++i)
    for (Eigen::Index j = 0; j + ww <= a.cols(); ++j) {
      const auto wa = a.block(i, j, wh, ww);
      const auto wb = b.block(i, j, wh, ww);
      const double ma = wa.sum() / n, mb = wb.sum() / n;
      const double va = (wa.array() - ma).square().sum() / n;
      const double vb = (wb.array() - mb).square().sum() / n;
      const double cov = ((wa.array() - ma) * (wb.array() - mb)).sum() / n;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  return total / static_cast<double>(windows);
}

Image clip01(const Image& img) { return img.cwiseMax(0.0).cwiseMin(1.0); }

}  // namespace ldmdn
