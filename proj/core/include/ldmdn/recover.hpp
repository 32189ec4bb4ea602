#pragma once

#include <cstdint>
#include <vector>

#include "ldmdn/ct.hpp"
#include "ldmdn/manifold.hpp"

namespace ldmdn {

/// Pixel-patch manifold recovery of an image from a subset of known pixels.
struct RecoverConfig {
  int patch = 8;
  int stride = 2;
  double mu_bar = 0.5;
  double bandwidth = 0.0;  // 0 = median heuristic, recomputed each iteration
  int knn = 20;            // 0 = dense weights
  int max_iterations = 50;
  double tolerance = 1e-4;  // on |f_new - f| / |f|

  void validate() const;
};

struct RecoverResult {
  Image image;
  int iterations = 0;
  double last_change = 0.0;
  std::vector<double> changes;
};

/// Known pixels replaced by `observed`, unknown ones by their mean.
Image mean_fill(const Image& observed, const Mask& known);

/// Alternates the coordinate solve on the patch set of the current image, a
/// least-squares re-assembly that keeps known pixels fixed, and the dual update.
RecoverResult recover_image(const Image& observed, const Mask& known, const RecoverConfig& cfg);

/// Seeded mask with round(fraction * H * W) known pixels.
Mask random_mask(int h, int w, double fraction, std::uint64_t seed);

}  // namespace ldmdn
