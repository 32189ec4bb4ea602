#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ldmdn/manifold.hpp"

namespace ldmdn {

void KernelConfig::validate() const {
  if (!(t > 0.0)) throw std::invalid_argument("kernel bandwidth t must be > 0, got " + std::to_string(t));
  if (!(c_t > 0.0)) throw std::invalid_argument("kernel constant c_t must be > 0");
  if (!(mu_bar > 0.0)) throw std::invalid_argument("solver coupling mu_bar must be > 0");
  if (knn < 0) throw std::invalid_argument("knn must be >= 0");
}

Eigen::MatrixXd GraphOperators::apply_w(const Eigen::MatrixXd& x) const {
  if (sparse) return w_sparse * x;
  return w * x;
}

Eigen::MatrixXd GraphOperators::apply_l(const Eigen::MatrixXd& x) const {
  if (sparse) return l_sparse * x;
  return l * x;
}

double GraphOperators::weight(Eigen::Index i, Eigen::Index j) const {
  return sparse ? w_sparse.coeff(i, j) : w(i, j);
}

namespace {

double squared_distance(const Eigen::MatrixXd& p, Eigen::Index i, Eigen::Index j) {
  double acc = 0.0;
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double diff = p(i, c) - p(j, c);
    acc += diff * diff;
  }
  return acc;
}

constexpr std::size_t kMaxBandwidthPairs = 2'000'000;

}  // namespace

double median_bandwidth(const Eigen::MatrixXd& points) {
  const auto m = points.rows();
  if (m < 2) return 1.0;
  const std::size_t pairs = static_cast<std::size_t>(m) * static_cast<std::size_t>(m - 1) / 2;
  const std::size_t stride = std::max<std::size_t>(1, pairs / kMaxBandwidthPairs);
  std::vector<double> sq;
  sq.reserve(pairs / stride + 1);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j, ++k)
      if (k % stride == 0) sq.push_back(squared_distance(points, i, j));
  auto mid = sq.begin() + static_cast<std::ptrdiff_t>(sq.size() / 2);
  std::nth_element(sq.begin(), mid, sq.end());
  double median = *mid;
  if (median <= 0.0) {
    const double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / static_cast<double>(sq.size());
    median = mean > 0.0 ? mean : 4.0;
  }
  return median / 4.0;
}

GraphOperators gaussian_weights(const Eigen::MatrixXd& points, const KernelConfig& cfg) {
  cfg.validate();
  const auto m = points.rows();
  if (m < 1) throw std::invalid_argument("gaussian_weights: empty point set");
  const double inv = 1.0 / (4.0 * cfg.t);
  GraphOperators ops;

  if (cfg.knn == 0 || cfg.knn >= m - 1) {
    ops.w.resize(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      ops.w(i, i) = cfg.c_t;
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double v = cfg.c_t * std::exp(-squared_distance(points, i, j) * inv);
        ops.w(i, j) = v;
        ops.w(j, i) = v;
      }
    }
    ops.degrees = ops.w.rowwise().sum();
    ops.l = -ops.w;
    ops.l.diagonal() += ops.degrees;
    return ops;
  }

  // k-nearest-neighbour graph, symmetrised by union.
  const int k = cfg.knn;
  std::vector<std::vector<Eigen::Index>> nbrs(static_cast<std::size_t>(m));
  std::vector<std::pair<double, Eigen::Index>> cand(static_cast<std::size_t>(m - 1));
  for (Eigen::Index i = 0; i < m; ++i) {
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < m; ++j)
      if (j != i) cand[c++] = {squared_distance(points, i, j), j};
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int q = 0; q < k; ++q) nbrs[static_cast<std::size_t>(i)].push_back(cand[static_cast<std::size_t>(q)].second);
  }
  std::vector<std::vector<Eigen::Index>> adj(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    for (auto j : nbrs[static_cast<std::size_t>(i)]) {
      adj[static_cast<std::size_t>(i)].push_back(j);
      adj[static_cast<std::size_t>(j)].push_back(i);
    }
  std::vector<Eigen::Triplet<double>> trips;
  ops.degrees = Eigen::VectorXd::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    auto& a = adj[static_cast<std::size_t>(i)];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    trips.emplace_back(i, i, cfg.c_t);
    for (auto j : a) {
      if (j < i) continue;
      const double v = cfg.c_t * std::exp(-squared_distance(points, i, j) * inv);
      trips.emplace_back(i, j, v);
      trips.emplace_back(j, i, v);
    }
  }
  ops.sparse = true;
  ops.w_sparse.resize(m, m);
  ops.w_sparse.setFromTriplets(trips.begin(), trips.end());
  for (int outer = 0; outer < ops.w_sparse.outerSize(); ++outer)
    for (Eigen::SparseMatrix<double>::InnerIterator it(ops.w_sparse, outer); it; ++it)
      ops.degrees(it.row()) += it.value();
  Eigen::SparseMatrix<double> d(m, m);
  std::vector<Eigen::Triplet<double>> diag;
  for (Eigen::Index i = 0; i < m; ++i) diag.emplace_back(i, i, ops.degrees(i));
  d.setFromTriplets(diag.begin(), diag.end());
  ops.l_sparse = d - ops.w_sparse;
  return ops;
}

GraphOperators gaussian_weights(const PatchSet& patches, const KernelConfig& cfg) {
  return gaussian_weights(patches.points, cfg);
}

Eigen::MatrixXd solve_coordinates(const GraphOperators& ops, const Eigen::MatrixXd& v, const KernelConfig& cfg,
                                  SolveReport* report, const SolverOptions& opts) {
  cfg.validate();
  const auto m = ops.size();
  if (v.rows() != m) {
    throw std::invalid_argument("solve_coordinates: right-hand side has " + std::to_string(v.rows()) +
                                " rows, operators have " + std::to_string(m));
  }
  const auto d = v.cols();
  const double mu = cfg.mu_bar;
  const int max_it = opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(10 * m);

  // A x = D x - (1 - mu) W x  ==  (L + mu W) x
  auto apply_a = [&](const Eigen::MatrixXd& x) -> Eigen::MatrixXd {
    Eigen::MatrixXd ax = ops.apply_w(x);
    ax *= -(1.0 - mu);
    ax += ops.degrees.asDiagonal() * x;
    return ax;
  };
  Eigen::VectorXd inv_diag(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double wii = ops.weight(i, i);
    inv_diag(i) = 1.0 / (ops.degrees(i) - wii + mu * wii);
  }

  const Eigen::MatrixXd b = mu * ops.apply_w(v);
  Eigen::VectorXd b_norm = b.colwise().norm().transpose();
  Eigen::MatrixXd x = v;
  for (Eigen::Index c = 0; c < d; ++c)
    if (b_norm(c) == 0.0) x.col(c).setZero();

  auto true_residuals = [&](Eigen::MatrixXd& r) {
    r = b - apply_a(x);
    Eigen::VectorXd rel(d);
    for (Eigen::Index c = 0; c < d; ++c) rel(c) = b_norm(c) == 0.0 ? 0.0 : r.col(c).norm() / b_norm(c);
    return rel;
  };

  Eigen::MatrixXd r;
  Eigen::VectorXd rel = true_residuals(r);
  int iterations = 0;
  constexpr int kMaxRestarts = 8;
  for (int restart = 0; restart <= kMaxRestarts && iterations < max_it; ++restart) {
    std::vector<bool> active(static_cast<std::size_t>(d));
    bool any = false;
    for (Eigen::Index c = 0; c < d; ++c) {
      active[static_cast<std::size_t>(c)] = rel(c) > opts.tolerance;
      any = any || active[static_cast<std::size_t>(c)];
    }
    if (!any) break;

    Eigen::MatrixXd z = inv_diag.asDiagonal() * r;
    Eigen::MatrixXd p = z;
    Eigen::VectorXd rz = (r.cwiseProduct(z)).colwise().sum().transpose();
    while (any && iterations < max_it) {
      const Eigen::MatrixXd ap = apply_a(p);
      ++iterations;
      any = false;
      for (Eigen::Index c = 0; c < d; ++c) {
        if (!active[static_cast<std::size_t>(c)]) continue;
        const double pap = p.col(c).dot(ap.col(c));
        if (!(pap > 0.0)) {
          active[static_cast<std::size_t>(c)] = false;
          continue;
        }
        const double alpha = rz(c) / pap;
        x.col(c) += alpha * p.col(c);
        r.col(c) -= alpha * ap.col(c);
        if (r.col(c).norm() <= opts.tolerance * b_norm(c)) {
          active[static_cast<std::size_t>(c)] = false;
          continue;
        }
        z.col(c) = inv_diag.cwiseProduct(r.col(c));
        const double rz_new = r.col(c).dot(z.col(c));
        const double beta = rz_new / rz(c);
        rz(c) = rz_new;
        p.col(c) = z.col(c) + beta * p.col(c);
        any = true;
      }
    }
    // The recursive residual drifts; restart from the true one where needed.
    rel = true_residuals(r);
  }

  const double worst = d > 0 ? rel.maxCoeff() : 0.0;
  if (report) {
    report->worst_residual = worst;
    report->iterations = iterations;
  }
  if (!(worst <= opts.tolerance)) {
    throw SolverError("conjugate gradients did not converge: worst column residual " + std::to_string(worst) +
                          " after " + std::to_string(iterations) + " iterations",
                      worst);
  }
  return x;
}

double dirichlet_energy(const Eigen::MatrixXd& u, const GraphOperators& ops) {
  if (u.rows() != ops.size()) {
    throw std::invalid_argument("dirichlet_energy: " + std::to_string(u.rows()) + " rows vs " +
                                std::to_string(ops.size()) + " graph nodes");
  }
  const double e = u.cwiseProduct(ops.apply_l(u)).sum();
  return std::max(0.0, e);
}

DualVariable normalize_dual(const DualVariable& d_hat) {
  DualVariable out;
  if (d_hat.values.size() == 0) {
    out.values = d_hat.values;
    return out;
  }
  const double lo = d_hat.values.minCoeff();
  const double hi = d_hat.values.maxCoeff();
  if (!(hi > lo)) {
    out.values = Eigen::MatrixXd::Zero(d_hat.values.rows(), d_hat.values.cols());
    return out;
  }
  out.values = (d_hat.values.array() - lo) / (hi - lo);
  return out;
}

}  // namespace ldmdn
