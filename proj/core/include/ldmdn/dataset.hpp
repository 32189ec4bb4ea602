#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ldmdn/ct.hpp"
#include "ldmdn/network.hpp"
#include "ldmdn/trainer.hpp"

namespace ldmdn {

struct DatasetConfig {
  int image_size = 64;
  int n_views = 180;
  double severity = 1.0;
  double noise = 0.05;
  double ratio = 0.15;  // fraction of training pairs whose artifact image joins the unpaired artifact pool
  std::uint64_t seed = 0;
  PhantomConfig phantom;

  void validate() const;
  ScanGeometry scan() const { return ScanGeometry::for_image(image_size, n_views); }
};

/// One synthesized scan. Images are clipped to [0,1] and rounded to float.
struct CtPair {
  Image artifact;  // FBP of the corrupted sinogram
  Image clean;     // FBP of the clean sinogram (metal included)
  Image li;        // FBP of the LI-corrected corrupted sinogram
  std::uint64_t seed = 0;
  int metal_pixels = 0;
  int li_fallback_views = 0;
};

struct Dataset {
  DatasetConfig cfg;
  std::vector<CtPair> train;
  std::vector<CtPair> test;
  std::vector<std::size_t> pool_artifact;  // indices into train
  std::vector<std::size_t> pool_clean;     // indices into train, disjoint from pool_artifact
};

CtPair synthesize_pair(const DatasetConfig& cfg, std::uint64_t seed);

/// n_pairs training pairs (all of which form the paired pool) split into
/// disjoint unpaired pools, plus n_test held-out pairs.
Dataset synthesize_dataset(int n_pairs, int n_test, const DatasetConfig& cfg);

/// Directory layout: manifest.txt, train/ and test/ with `<kind>_<index>.f32`
/// dumps ([1,1,H,W]) and 8-bit `.pgm` previews.
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

void write_pgm(const std::filesystem::path& path, const Image& img);
void save_image(const std::filesystem::path& path, const Image& img);
Image load_image(const std::filesystem::path& path);

/// [0,1] image -> [1,1,H,W] tensor in the network range [-1,1], and back.
Tensor to_network(const Image& img);
Image from_network(const Tensor& t, std::int64_t index = 0);

TrainingPools make_training_pools(const Dataset& ds);

struct EvalRow {
  std::size_t index = 0;
  double psnr_in = 0, ssim_in = 0;    // network input vs clean
  double psnr_out = 0, ssim_out = 0;  // corrected vs clean
};

struct EvalSummary {
  std::vector<EvalRow> rows;
  double mean_psnr_in = 0, mean_ssim_in = 0, mean_psnr_out = 0, mean_ssim_out = 0;
};

/// Scores `net` on the pairs. A null network passes its input through; with
/// `clean_input` the clean image is fed instead of the artifact image.
EvalSummary evaluate(const DisentangleNet* net, const std::vector<CtPair>& pairs, bool clean_input = false,
                     double peak = 1.0);
void write_eval_csv(std::ostream& os, const EvalSummary& s);

}  // namespace ldmdn
