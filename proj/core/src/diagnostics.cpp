#include "ldmdn/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "ldmdn/manifold.hpp"
#include "ldmdn/ops.hpp"
#include "ldmdn/rng.hpp"

namespace ldmdn {

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal01(rng);
  return m;
}

DiagCheck check(std::string name, double measured, double tolerance) {
  return {std::move(name), measured, tolerance, measured <= tolerance};
}

double column_range(const Eigen::MatrixXd& m, Eigen::Index c) { return m.col(c).maxCoeff() - m.col(c).minCoeff(); }

// Max over parameters of |g_auto - g_fd| / max(|g_auto|, |g_fd|), both as
// whole-tensor norms, for a two-layer conv net in double precision.
double gradient_error(std::uint64_t seed) {
  std::uint64_t rng = seed;
  auto rand_tensor = [&](Shape s) {
    std::vector<double> v(static_cast<std::size_t>(shape_numel(s)));
    for (auto& x : v) x = normal01(rng) * 0.5;
    return TensorD::from_data(std::move(s), std::move(v));
  };
  auto x = rand_tensor({1, 2, 6, 6});
  auto target = rand_tensor({1, 1, 6, 6});
  auto k1 = rand_tensor({3, 2, 3, 3});
  auto k2 = rand_tensor({1, 3, 3, 3});
  k1.set_requires_grad(true);
  k2.set_requires_grad(true);
  auto loss_fn = [&]() { return mse_loss(conv2d(leaky_relu(conv2d(x, k1, 1, 1)), k2, 1, 1), target); };
  backward(loss_fn());

  constexpr double h = 1e-3;
  double worst = 0.0;
  for (auto* p : {&k1, &k2}) {
    std::vector<double> fd(p->numel(), 0.0), ad(p->grad().begin(), p->grad().end());
    for (std::size_t i = 0; i < p->numel(); ++i) {
      const double orig = (*p)[i];
      KinkProbe kp, km;
      double lp, lm;
      {
        NoGradGuard ng;
        (*p)[i] = orig + h;
        ScopedKinkProbe sp(kp);
        lp = loss_fn().item();
      }
      {
        NoGradGuard ng;
        (*p)[i] = orig - h;
        ScopedKinkProbe sm(km);
        lm = loss_fn().item();
      }
      (*p)[i] = orig;
      if (kp == km) {
        fd[i] = (lp - lm) / (2 * h);
      } else {
        fd[i] = ad[i];  // stencil straddles a kink
      }
    }
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i) {
      diff += (fd[i] - ad[i]) * (fd[i] - ad[i]);
      na += ad[i] * ad[i];
      nf += fd[i] * fd[i];
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nf), 1e-300});
    worst = std::max(worst, std::sqrt(diff) / denom);
  }
  return worst;
}

}  // namespace

std::vector<DiagCheck> run_diagnostics(const DiagOptions& opts) {
  std::vector<DiagCheck> out;
  std::uint64_t rng = opts.seed ^ 0x6469616733ULL;
  const Eigen::Index m = std::max(2, opts.points);
  const Eigen::Index d = 128;

  Eigen::MatrixXd points = random_matrix(m, d, rng) * 0.3;
  KernelConfig kc;
  kc.t = median_bandwidth(points);
  auto ops = gaussian_weights(points, kc);

  Eigen::MatrixXd w = ops.w;
  if (opts.inject_asymmetry) w(0, 1) += 1e-3;
  out.push_back(check("weights_symmetric", (w - w.transpose()).cwiseAbs().maxCoeff(), 0.0));
  out.push_back(check("weights_diagonal_equals_c_t", (ops.w.diagonal().array() - kc.c_t).abs().maxCoeff(), 0.0));

  double rows = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) rows = std::max(rows, std::abs(ops.l.row(i).sum()) / ops.degrees(i));
  out.push_back(check("laplacian_row_sums", rows, 1e-10));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ops.l, Eigen::EigenvaluesOnly);
  out.push_back(check("laplacian_psd", std::max(0.0, -eig.eigenvalues().minCoeff()), 1e-9));

  {
    Eigen::MatrixXd two(2, 1);
    two << 0.0, 2.0;
    KernelConfig k1;
    k1.t = 1.0;
    const auto g = gaussian_weights(two, k1);
    out.push_back(check("kernel_value", std::abs(g.w(0, 1) - std::exp(-1.0)), 1e-15));
  }

  const Eigen::MatrixXd v = random_matrix(m, d, rng);
  SolveReport rep;
  const Eigen::MatrixXd u = solve_coordinates(ops, v, kc, &rep);
  out.push_back(check("solver_residual", rep.worst_residual, 1e-8));

  const Eigen::MatrixXd a = ops.l + kc.mu_bar * ops.w;
  const Eigen::MatrixXd direct = a.ldlt().solve(kc.mu_bar * ops.w * v);
  out.push_back(check("solver_vs_direct", (u - direct).norm() / direct.norm(), 1e-6));

  {
    KernelConfig big = kc;
    big.mu_bar = 1e6;
    const Eigen::MatrixXd ub = solve_coordinates(ops, v, big);
    out.push_back(check("solver_limit_large_mu", (ub - v).norm() / v.norm(), 1e-3));
    KernelConfig small = kc;
    small.mu_bar = 1e-6;
    const Eigen::MatrixXd us = solve_coordinates(ops, v, small);
    double ratio = 0.0;
    for (Eigen::Index c = 0; c < d; ++c) ratio = std::max(ratio, column_range(us, c) / column_range(v, c));
    out.push_back(check("solver_limit_small_mu", ratio, 1e-3));
  }

  {
    double worst = 0.0;
    for (double mu : {0.06, 0.6, 6.0}) {
      KernelConfig k = kc;
      k.mu_bar = mu;
      const Eigen::MatrixXd uu = solve_coordinates(ops, v, k);
      worst = std::max(worst, dirichlet_energy(uu, ops) / dirichlet_energy(v, ops));
    }
    out.push_back(check("energy_reduction_ratio", worst, 1.0));
  }

  {
    DualVariable dv{random_matrix(m, d, rng)};
    const auto nd = normalize_dual(dv);
    out.push_back(check("dual_normalized_range",
                        std::max(std::abs(nd.values.minCoeff()), std::abs(nd.values.maxCoeff() - 1.0)), 0.0));
  }

  out.push_back(check("gradient_finite_difference", gradient_error(derive_seed(opts.seed, 9)), 1e-4));
  return out;
}

void print_diagnostics(std::ostream& os, const std::vector<DiagCheck>& checks) {
  char buf[160];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%-4s %-30s measured %-12.4g tolerance %.4g\n", c.pass ? "ok" : "FAIL",
                  c.name.c_str(), c.measured, c.tolerance);
    os << buf;
  }
}

}  // namespace ldmdn
