#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "ldmdn/manifold.hpp"
#include "ldmdn/ops.hpp"
#include "support.hpp"

using namespace ldmdn;
using ldmdn::test::random_tensor;

namespace {

Eigen::MatrixXd random_points(Eigen::Index m, Eigen::Index d, std::uint64_t seed) {
  std::uint64_t rng = seed;
  Eigen::MatrixXd p(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) p(i, j) = uniform(rng, -1.0, 1.0);
  return p;
}

// Clustered cloud: more graph structure than uniform noise.
Eigen::MatrixXd clustered_points(Eigen::Index m, Eigen::Index d, std::uint64_t seed) {
  std::uint64_t rng = seed;
  const auto centres = random_points(4, d, seed ^ 0x55);
  Eigen::MatrixXd p(m, d);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto c = static_cast<Eigen::Index>(uniform_index(rng, 4));
    for (Eigen::Index j = 0; j < d; ++j) p(i, j) = centres(c, j) + 0.1 * normal01(rng);
  }
  return p;
}

Eigen::MatrixXd dense_w(const GraphOperators& ops) {
  Eigen::MatrixXd w(ops.size(), ops.size());
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = ops.weight(i, j);
  return w;
}

double pairwise_energy(const Eigen::MatrixXd& u, const Eigen::MatrixXd& w) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    for (Eigen::Index j = 0; j < u.rows(); ++j) e += 0.5 * w(i, j) * (u.row(i) - u.row(j)).squaredNorm();
  return e;
}

Eigen::MatrixXd direct_solve(const Eigen::MatrixXd& w, const Eigen::MatrixXd& v, double mu) {
  const Eigen::VectorXd deg = w.rowwise().sum();
  const Eigen::MatrixXd l = Eigen::MatrixXd(deg.asDiagonal()) - w;
  const Eigen::MatrixXd a = l + mu * w;
  return a.ldlt().solve(mu * w * v);
}

}  // namespace

TEST_CASE("kernel config validation") {
  CHECK_THROWS_AS(KernelConfig({0.0, 1.0, 0.6, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(KernelConfig({1.0, 0.0, 0.6, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(KernelConfig({1.0, 1.0, -1.0, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(KernelConfig({1.0, 1.0, 0.6, -2}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(gaussian_weights(Eigen::MatrixXd(0, 3), KernelConfig{}), std::invalid_argument);
}

TEST_CASE("dense weights follow the Gaussian kernel exactly") {
  const auto p = random_points(30, 5, 1);
  const KernelConfig kc{0.7, 1.3, 0.6, 0};
  const auto ops = gaussian_weights(p, kc);
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index j = 0; j < 30; ++j) {
      const double expect = 1.3 * std::exp(-(p.row(i) - p.row(j)).squaredNorm() / (4 * 0.7));
      CHECK(ops.weight(i, j) == doctest::Approx(expect).epsilon(1e-14));
      CHECK(ops.weight(i, j) == ops.weight(j, i));
    }
  CHECK(ops.w.diagonal().isConstant(1.3));
  CHECK((ops.degrees - ops.w.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("laplacian rows sum to zero and the spectrum is non-negative") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto m = 2 + static_cast<Eigen::Index>(seed * 17 % 60);
    const auto p = clustered_points(m, 16, seed);
    KernelConfig kc;
    kc.t = median_bandwidth(p);
    const auto ops = gaussian_weights(p, kc);
    const Eigen::VectorXd rows = ops.l.rowwise().sum();
    for (Eigen::Index i = 0; i < m; ++i) CHECK(std::abs(rows(i)) <= 1e-10 * ops.degrees(i));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.l);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * ops.degrees.maxCoeff());
  }
}

TEST_CASE("knn weights are a symmetric truncation of the dense kernel") {
  const auto p = clustered_points(60, 8, 3);
  KernelConfig dense_cfg;
  dense_cfg.t = median_bandwidth(p);
  KernelConfig knn_cfg = dense_cfg;
  knn_cfg.knn = 5;
  const auto dense = gaussian_weights(p, dense_cfg);
  const auto sparse = gaussian_weights(p, knn_cfg);
  REQUIRE(sparse.sparse);
  const auto w = dense_w(sparse);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < 60; ++i) {
    int nonzero = 0;
    for (Eigen::Index j = 0; j < 60; ++j) {
      if (i == j || w(i, j) == 0.0) continue;
      ++nonzero;
      CHECK(w(i, j) == doctest::Approx(dense.w(i, j)).epsilon(1e-14));
    }
    CHECK(nonzero >= 5);
    // The k nearest neighbours of i are always kept.
    std::vector<std::pair<double, Eigen::Index>> by_dist;
    for (Eigen::Index j = 0; j < 60; ++j)
      if (j != i) by_dist.emplace_back((p.row(i) - p.row(j)).squaredNorm(), j);
    std::sort(by_dist.begin(), by_dist.end());
    for (int k = 0; k < 5; ++k) CHECK(w(i, by_dist[k].second) > 0.0);
  }
  const Eigen::MatrixXd l = sparse.l_sparse;
  CHECK(l.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd x = random_points(60, 3, 9);
  CHECK((sparse.apply_l(x) - l * x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("median bandwidth and its fallbacks") {
  const auto p = random_points(41, 3, 4);
  std::vector<double> sq;
  for (Eigen::Index i = 0; i < 41; ++i)
    for (Eigen::Index j = i + 1; j < 41; ++j) sq.push_back((p.row(i) - p.row(j)).squaredNorm());
  std::sort(sq.begin(), sq.end());
  CHECK(median_bandwidth(p) == doctest::Approx(sq[sq.size() / 2] / 4.0));

  Eigen::MatrixXd same = Eigen::MatrixXd::Ones(5, 2);
  CHECK(median_bandwidth(same) == 1.0);
  Eigen::MatrixXd mostly = Eigen::MatrixXd::Zero(5, 1);
  mostly(0, 0) = 2.0;  // 4 of 10 distances are 4, the median is 0
  CHECK(median_bandwidth(mostly) == doctest::Approx((4 * 4.0 / 10) / 4.0));
  CHECK(median_bandwidth(Eigen::MatrixXd::Zero(1, 3)) == 1.0);
}

TEST_CASE("coordinate solve agrees with a dense direct solve") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto m = 5 + static_cast<Eigen::Index>(seed * 6);
    const auto p = clustered_points(m, 6, 40 + seed);
    const auto v = random_points(m, 4, 80 + seed);
    for (double mu : {0.06, 0.6, 6.0}) {
      KernelConfig kc;
      kc.t = median_bandwidth(p);
      kc.mu_bar = mu;
      const auto ops = gaussian_weights(p, kc);
      SolveReport rep;
      const auto u = solve_coordinates(ops, v, kc, &rep);
      const auto ref = direct_solve(ops.w, v, mu);
      CHECK((u - ref).norm() / ref.norm() < 1e-6);
      CHECK(rep.worst_residual <= 1e-8);
      const Eigen::MatrixXd a = ops.l + mu * ops.w;
      const Eigen::MatrixXd b = mu * ops.w * v;
      for (Eigen::Index c = 0; c < v.cols(); ++c) {
        CHECK((a * u.col(c) - b.col(c)).norm() <= 1e-8 * b.col(c).norm());
      }
    }
  }
}

TEST_CASE("zero right-hand sides give zero columns") {
  const auto p = random_points(20, 3, 5);
  Eigen::MatrixXd v = random_points(20, 3, 6);
  v.col(1).setZero();
  KernelConfig kc;
  kc.t = median_bandwidth(p);
  const auto u = solve_coordinates(gaussian_weights(p, kc), v, kc);
  CHECK(u.col(1).isZero(0.0));
}

TEST_CASE("solver limits in mu_bar") {
  const auto p = random_points(40, 16, 7);
  const auto v = random_points(40, 5, 8);
  KernelConfig kc;
  kc.t = median_bandwidth(p);
  kc.mu_bar = 1e6;
  const auto u_big = solve_coordinates(gaussian_weights(p, kc), v, kc);
  CHECK((u_big - v).norm() / v.norm() <= 1e-3);

  kc.mu_bar = 1e-6;
  const auto u_small = solve_coordinates(gaussian_weights(p, kc), v, kc);
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double range_v = v.col(c).maxCoeff() - v.col(c).minCoeff();
    CHECK(u_small.col(c).maxCoeff() - u_small.col(c).minCoeff() <= 1e-3 * range_v);
  }
}

TEST_CASE("dirichlet energy equals the pairwise sum and the solve lowers it") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = clustered_points(35, 6, 100 + seed);
    const auto v = random_points(35, 4, 200 + seed);
    for (double mu : {0.06, 0.6, 6.0}) {
      KernelConfig kc;
      kc.t = median_bandwidth(p);
      kc.mu_bar = mu;
      const auto ops = gaussian_weights(p, kc);
      CHECK(dirichlet_energy(v, ops) == doctest::Approx(pairwise_energy(v, ops.w)).epsilon(1e-10));
      const auto u = solve_coordinates(ops, v, kc);
      CHECK(dirichlet_energy(u, ops) <= dirichlet_energy(v, ops));
    }
  }
  const auto p = random_points(10, 2, 1);
  KernelConfig kc;
  const auto ops = gaussian_weights(p, kc);
  CHECK(dirichlet_energy(Eigen::MatrixXd::Constant(10, 3, 2.5), ops) == 0.0);
}

TEST_CASE("solver failure is reported with the worst residual") {
  const auto p = clustered_points(80, 6, 11);
  const auto v = random_points(80, 3, 12);
  KernelConfig kc;
  kc.t = median_bandwidth(p);
  SolverOptions opts;
  opts.max_iterations = 1;
  opts.tolerance = 1e-14;
  try {
    solve_coordinates(gaussian_weights(p, kc), v, kc, nullptr, opts);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.worst_residual() > 1e-14);
  }
  CHECK_THROWS_AS(solve_coordinates(gaussian_weights(p, kc), random_points(79, 3, 1), kc), std::invalid_argument);
}

TEST_CASE("dual normalisation") {
  DualVariable d{random_points(12, 5, 3) * 7.0};
  const auto n = normalize_dual(d);
  CHECK(n.values.minCoeff() == 0.0);
  CHECK(n.values.maxCoeff() == 1.0);
  const double lo = d.values.minCoeff(), hi = d.values.maxCoeff();
  CHECK(n.values(3, 2) == doctest::Approx((d.values(3, 2) - lo) / (hi - lo)));
  DualVariable shifted{d.values.array() * 3.0 + 11.0};
  CHECK((normalize_dual(shifted).values - n.values).cwiseAbs().maxCoeff() < 1e-12);
  const auto flat = normalize_dual(DualVariable{Eigen::MatrixXd::Constant(4, 4, -3.0)});
  CHECK(flat.values.isZero(0.0));
}

TEST_CASE("patch set rows are s x s blocks followed by the code column") {
  const GeometryConfig g{16, 8, 4};
  std::uint64_t rng = 13;
  const auto img_a = random_tensor<double>({2, 1, 16, 8}, rng);
  const auto code_a = random_tensor<double>({2, 16, 4, 2}, rng);
  const auto img_b = random_tensor<double>({1, 1, 16, 8}, rng);
  const auto code_b = random_tensor<double>({1, 16, 4, 2}, rng);
  // Free source listed first: corrected sources must still come first.
  const std::vector<PatchSource<double>> sources{{img_b, code_b, Branch::Free}, {img_a, code_a, Branch::Corrected}};
  const auto set = build_patch_set<double>(sources, g);
  REQUIRE(set.size() == 3 * 8);
  REQUIRE(set.dim() == 32);
  CHECK(set.provenance[15] == Branch::Corrected);
  CHECK(set.provenance[16] == Branch::Free);

  auto check_source = [&](const TensorD& img, const TensorD& code, std::int64_t n, Eigen::Index first_row) {
    Eigen::MatrixXd image(16, 8);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 8; ++x) image(y, x) = img[static_cast<std::size_t>((n * 16 + y) * 8 + x)];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 2; ++j) {
        const auto row = first_row + i * 2 + j;
        const Eigen::MatrixXd block = image.block(i * 4, j * 4, 4, 4);
        for (int py = 0; py < 4; ++py)
          for (int px = 0; px < 4; ++px) REQUIRE(set.points(row, py * 4 + px) == block(py, px));
        for (int c = 0; c < 16; ++c) {
          REQUIRE(set.points(row, 16 + c) == code[static_cast<std::size_t>(((n * 16 + c) * 4 + i) * 2 + j)]);
        }
      }
  };
  check_source(img_a, code_a, 0, 0);
  check_source(img_a, code_a, 1, 8);
  check_source(img_b, code_b, 0, 16);

  const auto t = patch_tensor<double>(sources, g);
  REQUIRE(t.shape() == Shape{24, 32});
  for (Eigen::Index r = 0; r < 24; ++r)
    for (Eigen::Index c = 0; c < 32; ++c) REQUIRE(t[static_cast<std::size_t>(r * 32 + c)] == set.points(r, c));

  CHECK_THROWS_AS(build_patch_set<double>(std::vector<PatchSource<double>>{{img_a, code_b, Branch::Free}}, g),
                  std::invalid_argument);
}

TEST_CASE("patch tensor gradients scatter back to images and codes") {
  const GeometryConfig g{8, 8, 2};
  std::uint64_t rng = 17;
  auto img = random_tensor<double>({1, 1, 8, 8}, rng, -1, 1, true);
  auto code = random_tensor<double>({1, 4, 4, 4}, rng, -1, 1, true);
  const auto weights = random_tensor<double>({16, 8}, rng);
  const std::vector<PatchSource<double>> sources{{img, code, Branch::Corrected}};
  auto f = [&] { return sum(mul(mul(patch_tensor<double>(sources, g), weights), patch_tensor<double>(sources, g))); };
  const auto res = test::check_gradients({img, code}, f, 1e-3, 0, 5);
  CHECK(res.checked == 128);
  CHECK(res.max_rel_error < 1e-8);
}

TEST_CASE("image patches wrap periodically") {
  Eigen::MatrixXd img(6, 4);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 4; ++x) img(y, x) = 10 * y + x;
  const auto p = image_patches(img, 3, 2);
  REQUIRE(p.rows() == 3 * 2);
  REQUIRE(p.cols() == 9);
  // patch 5: corner (4, 2); rows 4,5,0 and columns 2,3,0
  CHECK(p(5, 0) == 42);
  CHECK(p(5, 2) == 40);
  CHECK(p(5, 6) == 2);
  CHECK(p(5, 8) == 0);
  CHECK_THROWS_AS(image_patches(img, 3, 4), std::invalid_argument);
}
