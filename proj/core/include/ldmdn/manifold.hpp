#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldmdn/network.hpp"
#include "ldmdn/tensor.hpp"

namespace ldmdn {

// --- patch sets ---------------------------------------------------------------

enum class Branch : std::uint8_t { Corrected, Free };

/// One patch point per row: [s*s pixels of the patch | s*s code entries at
/// that location].
struct PatchSet {
  Eigen::MatrixXd points;
  std::vector<Branch> provenance;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

/// One contributor to a patch set: images [N,1,H,W] and their compressed
/// codes [N,s^2,H/s,W/s].
template <typename T>
struct PatchSource {
  BasicTensor<T> images;
  BasicTensor<T> codes;
  Branch branch = Branch::Corrected;
};

/// Rows enumerate corrected-branch sources first, then free-branch ones; within
/// a source, images in batch order and code locations in row-major order.
template <typename T>
PatchSet build_patch_set(std::span<const PatchSource<T>> sources, const GeometryConfig& geom);

/// Same layout as build_patch_set but as a differentiable [m, 2 s^2] tensor.
template <typename T>
BasicTensor<T> patch_tensor(std::span<const PatchSource<T>> sources, const GeometryConfig& geom);

/// Overlapping s x s pixel patches of a single image, stride `step`, with
/// periodic wrap-around so every pixel is covered by the same number of
/// patches. Row k corresponds to the patch with top-left corner
/// ((k / cols) * step, (k % cols) * step).
Eigen::MatrixXd image_patches(const Eigen::MatrixXd& image, int patch, int step);

// --- graph operators ---------------------------------------------------------

struct KernelConfig {
  double t = 1.0;       // bandwidth, squared-distance units
  double c_t = 1.0;     // kernel normalisation
  double mu_bar = 0.6;  // solver coupling
  int knn = 0;          // 0 = dense weights; k > 0 keeps k nearest neighbours (symmetrised)

  void validate() const;
};

/// W, its degrees, and L = D - W over a point cloud. Dense unless built with
/// k-nearest-neighbour truncation.
struct GraphOperators {
  Eigen::MatrixXd w;
  Eigen::VectorXd degrees;
  Eigen::MatrixXd l;
  Eigen::SparseMatrix<double> w_sparse;
  Eigen::SparseMatrix<double> l_sparse;
  bool sparse = false;

  Eigen::Index size() const { return degrees.size(); }
  Eigen::MatrixXd apply_w(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd apply_l(const Eigen::MatrixXd& x) const;
  double weight(Eigen::Index i, Eigen::Index j) const;
};

/// Median of the squared pairwise distances divided by 4; the default kernel
/// bandwidth. Falls back to the mean, then to 1, for degenerate clouds.
double median_bandwidth(const Eigen::MatrixXd& points);

/// w_ij = c_t * exp(-|p_i - p_j|^2 / (4 t)); degrees and L = D - W.
GraphOperators gaussian_weights(const Eigen::MatrixXd& points, const KernelConfig& cfg);
GraphOperators gaussian_weights(const PatchSet& patches, const KernelConfig& cfg);

// --- coordinate solve ------------------------------------------------------

struct SolverOptions {
  double tolerance = 1e-8;
  int max_iterations = 0;  // 0 = 10 * m
};

struct SolveReport {
  double worst_residual = 0.0;  // max over columns of |A u - b| / |b|
  int iterations = 0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double worst_residual)
      : std::runtime_error(what), worst_residual_(worst_residual) {}
  double worst_residual() const { return worst_residual_; }

 private:
  double worst_residual_;
};

/// Solves (L + mu_bar W) U = mu_bar W V column by column with Jacobi-
/// preconditioned conjugate gradients (all columns advance together).
Eigen::MatrixXd solve_coordinates(const GraphOperators& ops, const Eigen::MatrixXd& v, const KernelConfig& cfg,
                                  SolveReport* report = nullptr, const SolverOptions& opts = {});

/// sum over columns of u_col^T L u_col (clamped at 0).
double dirichlet_energy(const Eigen::MatrixXd& u, const GraphOperators& ops);

// --- dual variable -----------------------------------------------------------

struct DualVariable {
  Eigen::MatrixXd values;
};

/// Joint min-max normalisation to [0,1]; an all-equal input maps to zeros.
DualVariable normalize_dual(const DualVariable& d_hat);

}  // namespace ldmdn
