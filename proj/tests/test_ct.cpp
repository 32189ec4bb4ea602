#include <cmath>

#include "doctest.h"
#include "ldmdn/ct.hpp"
#include "ldmdn/rng.hpp"

using namespace ldmdn;

namespace {

double ssim_oracle(const Image& a, const Image& b, double peak) {
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  double total = 0.0;
  int windows = 0;
  for (Eigen::Index i = 0; i + 8 <= a.rows(); ++i)
    for (Eigen::Index j = 0; j + 8 <= a.cols(); ++j) {
      const Eigen::MatrixXd wa = a.block(i, j, 8, 8), wb = b.block(i, j, 8, 8);
      const double ma = wa.mean(), mb = wb.mean();
      const double va = (wa.array() - ma).square().mean();
      const double vb = (wb.array() - mb).square().mean();
      const double cov = ((wa.array() - ma) * (wb.array() - mb)).mean();
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++windows;
    }
  return total / windows;
}

Image noisy(const Image& img, double sigma, std::uint64_t seed) {
  Image out = img;
  for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += sigma * normal01(seed);
  return out;
}

}  // namespace

TEST_CASE("scan geometry") {
  const auto g = ScanGeometry::for_image(64);
  CHECK(g.n_detectors == 93);
  CHECK(g.n_detectors % 2 == 1);
  CHECK(g.detector_offset(46) == 0.0);
  CHECK(g.angle(90) == doctest::Approx(M_PI / 2));
  CHECK(ScanGeometry::for_image(63).n_detectors % 2 == 1);
  ScanGeometry bad;
  bad.n_views = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = {};
  bad.detector_spacing = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("disk projections are chord lengths") {
  const int n = 64;
  const double r = 20.0;
  const auto disk = disk_phantom(n, r);
  const auto g = ScanGeometry::for_image(n, 36);
  const auto sino = radon_forward(disk, g);
  for (int v = 0; v < g.n_views; ++v)
    for (int k = 0; k < g.n_detectors; ++k) {
      const double s = g.detector_offset(k);
      if (std::abs(s) > r - 4) continue;
      const double chord = 2.0 * std::sqrt(r * r - s * s);
      CHECK(sino(v, k) == doctest::Approx(chord).epsilon(0.02));
    }
  const double off = sino(0, 0);
  CHECK(off == 0.0);
}

TEST_CASE("projection conserves mass in every view") {
  const auto ph = random_phantom(PhantomConfig{}, 3);
  const auto g = ScanGeometry::for_image(64, 30);
  const auto sino = radon_forward(ph.pixels, g);
  const double mass = ph.pixels.sum();
  for (int v = 0; v < g.n_views; ++v) {
    CHECK(sino.row(v).sum() * g.detector_spacing == doctest::Approx(mass).epsilon(0.01));
  }
}

TEST_CASE("projection is linear") {
  const auto a = smooth_phantom(32, 1), b = smooth_phantom(32, 2);
  const auto g = ScanGeometry::for_image(32, 20);
  const Eigen::MatrixXd lhs = radon_forward(Image(2.0 * a - 0.5 * b), g);
  const Eigen::MatrixXd rhs = 2.0 * radon_forward(a, g) - 0.5 * radon_forward(b, g);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("filtered backprojection recovers a disk") {
  const auto disk = disk_phantom(64, 20.0);
  const auto g = ScanGeometry::for_image(64, 180);
  const auto rec = fbp(radon_forward(disk, g), g, 64);
  CHECK(psnr(rec, disk) >= 25.0);
  CHECK(rec.minCoeff() >= 0.0);
  const auto raw = fbp(radon_forward(disk, g), g, 64, false);
  CHECK(raw.minCoeff() < 0.0);
  CHECK(rec(32, 32) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("metal corruption acts on the trace only") {
  const auto ph = random_phantom(PhantomConfig{}, 5);
  const auto g = ScanGeometry::for_image(64, 60);
  const auto sino = radon_forward(ph, g);
  REQUIRE(sino.has_trace());
  CorruptionConfig cfg;
  cfg.noise = 0.0;
  cfg.severity = 0.7;
  const auto bent = corrupt_metal(sino, cfg);
  for (Eigen::Index v = 0; v < sino.data.rows(); ++v)
    for (Eigen::Index k = 0; k < sino.data.cols(); ++k) {
      const double p = sino.data(v, k);
      const double expect = sino.metal_trace(v, k) ? p + 0.7 * p * p / (1 + std::abs(p)) : p;
      REQUIRE(bent.data(v, k) == doctest::Approx(expect).epsilon(1e-14));
    }
  cfg.noise = 0.05;
  cfg.seed = 9;
  const auto n1 = corrupt_metal(sino, cfg), n2 = corrupt_metal(sino, cfg);
  CHECK(n1.data == n2.data);
  cfg.seed = 10;
  CHECK(corrupt_metal(sino, cfg).data != n1.data);
  CHECK(corrupt_metal(sino, 0.0).data == sino.data);
  CHECK_THROWS_AS(corrupt_metal(sino, -0.1), std::invalid_argument);
}

TEST_CASE("linear interpolation across the trace") {
  Sinogram s;
  s.data.resize(3, 6);
  s.data << 1, 2, 9, 9, 5, 6,  //
      9, 9, 3, 4, 5, 9,        //
      7, 7, 7, 7, 7, 7;
  s.metal_trace.resize(3, 6);
  s.metal_trace << false, false, true, true, false, false,  //
      true, true, false, false, false, true,                //
      true, true, true, true, true, true;
  int fallback = 0;
  const auto li = li_correct(s, &fallback);
  CHECK(li.data(0, 2) == doctest::Approx(2 + (5 - 2) / 3.0));
  CHECK(li.data(0, 3) == doctest::Approx(2 + 2 * (5 - 2) / 3.0));
  CHECK(li.data(1, 0) == 3);
  CHECK(li.data(1, 1) == 3);
  CHECK(li.data(1, 5) == 5);
  CHECK(li.data(0, 0) == 1);
  CHECK(fallback == 1);
  // Fully traced view: mean of its neighbours (views 1 and 0, wrapping).
  for (int k = 0; k < 6; ++k) CHECK(li.data(2, k) == doctest::Approx(0.5 * (li.data(1, k) + li.data(0, k))));
  Sinogram untraced{s.data, {}};
  CHECK(li_correct(untraced).data == s.data);
}

TEST_CASE("interpolated sinograms reconstruct better than corrupted ones") {
  const auto g = ScanGeometry::for_image(64, 180);
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto ph = random_phantom(PhantomConfig{}, seed);
    const auto sino = radon_forward(ph, g);
    const auto clean = clip01(fbp(sino, g, 64));
    const auto bad = clip01(fbp(corrupt_metal(sino, CorruptionConfig{1.0, 0.05, seed}), g, 64));
    const auto li = clip01(fbp(li_correct(corrupt_metal(sino, CorruptionConfig{1.0, 0.05, seed})), g, 64));
    wins += psnr(li, clean) > psnr(bad, clean) ? 1 : 0;
  }
  CHECK(wins >= 5);
}

TEST_CASE("random phantoms are seeded and carry an exact metal mask") {
  PhantomConfig cfg;
  const auto a = random_phantom(cfg, 17), b = random_phantom(cfg, 17), c = random_phantom(cfg, 18);
  CHECK(a.pixels == b.pixels);
  CHECK(a.pixels != c.pixels);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_phantom(cfg, seed);
    CHECK(p.metal_mask.any());
    CHECK((p.metal_mask == (p.pixels.array() >= cfg.metal_threshold)).all());
    CHECK(p.pixels.minCoeff() >= 0.0);
    CHECK(p.pixels.maxCoeff() <= cfg.metal_value + 1e-12);
    CHECK(p.pixels(0, 0) == 0.0);
  }
}

TEST_CASE("smooth phantoms are normalised") {
  const auto s = smooth_phantom(64, 4);
  CHECK(s.minCoeff() == doctest::Approx(0.05));
  CHECK(s.maxCoeff() == doctest::Approx(0.95));
  CHECK(smooth_phantom(64, 4) == s);
}

TEST_CASE("psnr and ssim") {
  const auto a = smooth_phantom(32, 1);
  CHECK(psnr(a, a) == kPsnrInfinity);
  const Image b = a.array() + 0.1;
  CHECK(psnr(b, a) == doctest::Approx(20.0));
  CHECK(psnr(b, a, 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)));
  CHECK(ssim(a, a) == doctest::Approx(1.0));
  const auto n = noisy(a, 0.05, 3);
  CHECK(ssim(n, a) == doctest::Approx(ssim_oracle(n, a, 1.0)).epsilon(1e-12));
  CHECK(ssim(n, a, 2.0) == doctest::Approx(ssim_oracle(n, a, 2.0)).epsilon(1e-12));
  CHECK(ssim(n, a) < 1.0);
  CHECK_THROWS(psnr(a, Image::Zero(31, 32)));
  CHECK_THROWS(ssim(a, a, 0.0));
  // Images smaller than the window use one whole-image window.
  const Image small = a.block(0, 0, 4, 4);
  CHECK(ssim(small, small) == doctest::Approx(1.0));
}

TEST_CASE("clip01") {
  Image x(1, 3);
  x << -0.5, 0.5, 1.5;
  const auto c = clip01(x);
  CHECK(c(0, 0) == 0.0);
  CHECK(c(0, 1) == 0.5);
  CHECK(c(0, 2) == 1.0);
}
