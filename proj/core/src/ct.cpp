#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldmdn/ct.hpp"
#include "ldmdn/rng.hpp"

namespace ldmdn {

void ScanGeometry::validate() const {
  if (n_views < 1) throw std::invalid_argument("scan geometry: n_views must be >= 1");
  if (n_detectors < 1) throw std::invalid_argument("scan geometry: n_detectors must be >= 1");
  if (!(detector_spacing > 0.0)) throw std::invalid_argument("scan geometry: detector_spacing must be > 0");
  if (!(angular_range > 0.0)) throw std::invalid_argument("scan geometry: angular_range must be > 0");
}

ScanGeometry ScanGeometry::for_image(int n, int n_views) {
  ScanGeometry g;
  g.n_views = n_views;
  g.n_detectors = static_cast<int>(std::ceil(n * std::numbers::sqrt2)) + 2;
  if (g.n_detectors % 2 == 0) ++g.n_detectors;
  return g;
}

namespace {

constexpr double kRayStep = 0.5;

double bilinear(const Image& img, double row, double col) {
  const auto h = img.rows(), w = img.cols();
  const double r0f = std::floor(row), c0f = std::floor(col);
  const auto r0 = static_cast<Eigen::Index>(r0f), c0 = static_cast<Eigen::Index>(c0f);
  const double fr = row - r0f, fc = col - c0f;
  double acc = 0.0;
  auto at = [&](Eigen::Index r, Eigen::Index c, double wgt) {
    if (wgt != 0.0 && r >= 0 && r < h && c >= 0 && c < w) acc += wgt * img(r, c);
  };
  at(r0, c0, (1 - fr) * (1 - fc));
  at(r0, c0 + 1, (1 - fr) * fc);
  at(r0 + 1, c0, fr * (1 - fc));
  at(r0 + 1, c0 + 1, fr * fc);
  return acc;
}

void check_square(const Image& img) {
  if (img.rows() != img.cols() || img.rows() == 0) {
    throw std::invalid_argument("radon_forward: image must be square and non-empty, got " +
                                std::to_string(img.rows()) + "x" + std::to_string(img.cols()));
  }
}

}  // namespace

Eigen::MatrixXd radon_forward(const Image& img, const ScanGeometry& geom) {
  geom.validate();
  check_square(img);
  const double c = 0.5 * static_cast<double>(img.rows() - 1);
  const double reach = 0.5 * std::numbers::sqrt2 * static_cast<double>(img.rows()) + 1.0;
  const int half = static_cast<int>(std::ceil(reach / kRayStep));
  Eigen::MatrixXd out(geom.n_views, geom.n_detectors);
  for (int v = 0; v < geom.n_views; ++v) {
    const double th = geom.angle(v);
    const double ct = std::cos(th), st = std::sin(th);
    for (int k = 0; k < geom.n_detectors; ++k) {
      const double u = geom.detector_offset(k);
      double acc = 0.0;
      for (int q = -half; q <= half; ++q) {
        const double s = q * kRayStep;
        const double x = u * ct - s * st;
        const double y = u * st + s * ct;
        acc += bilinear(img, y + c, x + c);
      }
      out(v, k) = acc * kRayStep;
    }
  }
  return out;
}

Sinogram radon_forward(const PhantomImage& img, const ScanGeometry& geom) {
  Sinogram s;
  s.data = radon_forward(img.pixels, geom);
  if (img.metal_mask.size() > 0 && img.metal_mask.any()) {
    if (img.metal_mask.rows() != img.pixels.rows() || img.metal_mask.cols() != img.pixels.cols()) {
      throw std::invalid_argument("radon_forward: metal mask shape differs from the image");
    }
    const Eigen::MatrixXd trace = radon_forward(Image(img.metal_mask.cast<double>().matrix()), geom);
    s.metal_trace = trace.array() > 0.0;
  } else {
    s.metal_trace = Mask::Constant(geom.n_views, geom.n_detectors, false);
  }
  return s;
}

Image fbp(const Eigen::MatrixXd& sino, const ScanGeometry& geom, int n, bool clamp) {
  geom.validate();
  if (sino.rows() != geom.n_views || sino.cols() != geom.n_detectors) {
    throw std::invalid_argument("fbp: sinogram is " + std::to_string(sino.rows()) + "x" + std::to_string(sino.cols()) +
                                ", geometry expects " + std::to_string(geom.n_views) + "x" +
                                std::to_string(geom.n_detectors));
  }
  if (n < 1) throw std::invalid_argument("fbp: output size must be >= 1");
  const int nd = geom.n_detectors;
  const double tau = geom.detector_spacing;

  // Ram-Lak kernel sampled at integer detector offsets.
  std::vector<double> h(static_cast<std::size_t>(2 * nd - 1), 0.0);
  for (int d = -(nd - 1); d <= nd - 1; ++d) {
    double val = 0.0;
    if (d == 0) {
      val = 1.0 / (4.0 * tau * tau);
    } else if (d % 2 != 0) {
      val = -1.0 / (static_cast<double>(d) * d * std::numbers::pi * std::numbers::pi * tau * tau);
    }
    h[static_cast<std::size_t>(d + nd - 1)] = val;
  }
  Eigen::MatrixXd filtered(geom.n_views, nd);
  for (int v = 0; v < geom.n_views; ++v)
    for (int k = 0; k < nd; ++k) {
      double acc = 0.0;
      for (int j = 0; j < nd; ++j) acc += sino(v, j) * h[static_cast<std::size_t>(k - j + nd - 1)];
      filtered(v, k) = tau * acc;
    }

  const double c = 0.5 * (n - 1);
  const double centre = 0.5 * (nd - 1);
  const double dtheta = geom.angular_range / geom.n_views;
  Image out = Image::Zero(n, n);
  for (int v = 0; v < geom.n_views; ++v) {
    const double th = geom.angle(v);
    const double ct = std::cos(th), st = std::sin(th);
    for (int i = 0; i < n; ++i) {
      const double y = i - c;
      for (int j = 0; j < n; ++j) {
        const double x = j - c;
        const double pos = (x * ct + y * st) / tau + centre;
        const double f0 = std::floor(pos);
        const int k0 = static_cast<int>(f0);
        const double fr = pos - f0;
        double val = 0.0;
        if (k0 >= 0 && k0 < nd) val += (1.0 - fr) * filtered(v, k0);
        if (k0 + 1 >= 0 && k0 + 1 < nd) val += fr * filtered(v, k0 + 1);
        out(i, j) += val;
      }
    }
  }
  out *= dtheta;
  if (clamp) out = out.cwiseMax(0.0);
  return out;
}

Image fbp(const Sinogram& sino, const ScanGeometry& geom, int n, bool clamp) { return fbp(sino.data, geom, n, clamp); }

Sinogram corrupt_metal(const Sinogram& sino, const CorruptionConfig& cfg) {
  if (!(cfg.severity >= 0.0)) throw std::invalid_argument("corrupt_metal: severity must be >= 0");
  if (!(cfg.noise >= 0.0)) throw std::invalid_argument("corrupt_metal: noise must be >= 0");
  Sinogram out = sino;
  if (cfg.severity == 0.0 || !sino.has_trace()) return out;
  if (sino.metal_trace.rows() != sino.data.rows() || sino.metal_trace.cols() != sino.data.cols()) {
    throw std::invalid_argument("corrupt_metal: metal trace shape differs from the sinogram");
  }
  std::uint64_t rng = cfg.seed ^ 0x6d6574616c6e6f69ULL;
  for (Eigen::Index v = 0; v < sino.data.rows(); ++v)
    for (Eigen::Index k = 0; k < sino.data.cols(); ++k) {
      if (!sino.metal_trace(v, k)) continue;
      const double p = sino.data(v, k);
      const double bent = p + cfg.severity * p * p / (1.0 + std::abs(p));
      out.data(v, k) = bent + cfg.severity * cfg.noise * std::abs(p) * normal01(rng);
    }
  return out;
}

Sinogram corrupt_metal(const Sinogram& sino, double severity) {
  CorruptionConfig cfg;
  cfg.severity = severity;
  return corrupt_metal(sino, cfg);
}

Sinogram li_correct(const Sinogram& sino, int* fallback_views) {
  Sinogram out = sino;
  if (!sino.has_trace()) return out;
  const auto nv = sino.data.rows(), nd = sino.data.cols();
  if (sino.metal_trace.rows() != nv || sino.metal_trace.cols() != nd) {
    throw std::invalid_argument("li_correct: metal trace shape differs from the sinogram");
  }
  std::vector<bool> full(static_cast<std::size_t>(nv), false);
  for (Eigen::Index v = 0; v < nv; ++v) {
    if (sino.metal_trace.row(v).all()) {
      full[static_cast<std::size_t>(v)] = true;
      continue;
    }
    Eigen::Index k = 0;
    while (k < nd) {
      if (!sino.metal_trace(v, k)) {
        ++k;
        continue;
      }
      Eigen::Index end = k;
      while (end < nd && sino.metal_trace(v, end)) ++end;
      const Eigen::Index left = k - 1, right = end;
      for (Eigen::Index q = k; q < end; ++q) {
        if (left >= 0 && right < nd) {
          const double a = static_cast<double>(q - left) / static_cast<double>(right - left);
          out.data(v, q) = (1.0 - a) * sino.data(v, left) + a * sino.data(v, right);
        } else if (left >= 0) {
          out.data(v, q) = sino.data(v, left);
        } else {
          out.data(v, q) = sino.data(v, right);
        }
      }
      k = end;
    }
  }
  int fallbacks = 0;
  for (Eigen::Index v = 0; v < nv; ++v) {
    if (!full[static_cast<std::size_t>(v)]) continue;
    ++fallbacks;
    // Nearest usable views on each side, wrapping around.
    Eigen::Index prev = -1, next = -1;
    for (Eigen::Index s = 1; s < nv && prev < 0; ++s) {
      const auto cand = (v - s + nv) % nv;
      if (!full[static_cast<std::size_t>(cand)]) prev = cand;
    }
    for (Eigen::Index s = 1; s < nv && next < 0; ++s) {
      const auto cand = (v + s) % nv;
      if (!full[static_cast<std::size_t>(cand)]) next = cand;
    }
    if (prev < 0) {
      out.data.row(v).setZero();
    } else {
      out.data.row(v) = 0.5 * (out.data.row(prev) + out.data.row(next));
    }
  }
  if (fallback_views) *fallback_views += fallbacks;
  return out;
}

}  // namespace ldmdn
