#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>

namespace ldmdn {

/// Images are row-major H x W matrices; row i, column j is pixel (i, j).
using Image = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Parallel-beam geometry. Views are spread uniformly over [0, angular_range);
/// detector k sits at (k - (n_detectors - 1) / 2) * detector_spacing from the
/// rotation centre, which is the image centre. Distances are in pixels.
struct ScanGeometry {
  int n_views = 180;
  int n_detectors = 93;
  double detector_spacing = 1.0;
  double angular_range = 3.14159265358979323846;

  void validate() const;
  double angle(int view) const { return angular_range * view / n_views; }
  double detector_offset(int k) const { return (k - 0.5 * (n_detectors - 1)) * detector_spacing; }

  /// Odd detector count covering the diagonal of an n x n image.
  static ScanGeometry for_image(int n, int n_views = 180);
};

struct Sinogram {
  Eigen::MatrixXd data;  // n_views x n_detectors
  Mask metal_trace;      // same shape; empty trace when no metal

  bool has_trace() const { return metal_trace.size() > 0 && metal_trace.any(); }
};

struct PhantomImage {
  Image pixels;
  Mask metal_mask;
};

/// Line integrals by bilinear sampling along each ray (step 0.5 pixel).
Eigen::MatrixXd radon_forward(const Image& img, const ScanGeometry& geom);
/// Projects the pixels; the metal trace is where the projected metal mask is positive.
Sinogram radon_forward(const PhantomImage& img, const ScanGeometry& geom);

/// Ram-Lak filtered backprojection onto an n x n grid. Negative values are
/// clamped to zero unless `clamp` is false.
Image fbp(const Eigen::MatrixXd& sino, const ScanGeometry& geom, int n, bool clamp = true);
Image fbp(const Sinogram& sino, const ScanGeometry& geom, int n, bool clamp = true);

struct CorruptionConfig {
  double severity = 1.0;
  double noise = 0.05;  // relative noise level inside the trace, scaled by severity
  std::uint64_t seed = 0;
};

/// Inside the metal trace: v -> v + severity * v^2 / (1 + v) plus seeded
/// Gaussian noise of std severity * noise * v. Bins outside the trace are
/// copied untouched.
Sinogram corrupt_metal(const Sinogram& sino, const CorruptionConfig& cfg);
Sinogram corrupt_metal(const Sinogram& sino, double severity);

/// Per view, replaces traced bins by linear interpolation between the nearest
/// untraced neighbours (constant extension at the detector edges). A view that
/// is entirely traced takes the average of the adjacent views and bumps
/// `fallback_views` when given.
Sinogram li_correct(const Sinogram& sino, int* fallback_views = nullptr);

// --- phantoms --------------------------------------------------------------

struct PhantomConfig {
  int size = 64;
  double body_value = 0.3;
  int min_ellipses = 3;
  int max_ellipses = 6;
  int max_bars = 2;
  int min_metal = 1;
  int max_metal = 3;
  double metal_value = 2.0;
  double metal_threshold = 1.5;
  double metal_radius_min = 1.5;
  double metal_radius_max = 3.0;
  int supersample = 4;
};

/// Soft-tissue body ellipse, random inner ellipses and bars, 1-3 metal blobs.
PhantomImage random_phantom(const PhantomConfig& cfg, std::uint64_t seed);
/// Anti-aliased disk of the given radius centred in an n x n image.
Image disk_phantom(int n, double radius, double value = 1.0, int supersample = 8);
/// Smooth image in [0,1]: a few Gaussian bumps over a low-frequency ramp.
Image smooth_phantom(int n, std::uint64_t seed);

// --- metrics ---------------------------------------------------------------

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean SSIM over all 8x8 windows (stride 1), K1 = 0.01, K2 = 0.03, dynamic
/// range `peak`, population statistics.
double ssim(const Image& a, const Image& b, double peak = 1.0);

Image clip01(const Image& img);

}  // namespace ldmdn
