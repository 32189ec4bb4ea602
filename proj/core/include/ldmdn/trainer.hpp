#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ldmdn/adam.hpp"
#include "ldmdn/manifold.hpp"
#include "ldmdn/network.hpp"

namespace ldmdn {

enum class TrainMode { Sup, LdmSup, Adn, LdmDn, AdnSup, LdmDnSup };

std::string to_string(TrainMode m);
/// Accepts the display names ("LDM-DN-Sup") case-insensitively.
TrainMode parse_train_mode(std::string_view name);
NetworkVariant mode_variant(TrainMode m);
bool mode_uses_manifold(TrainMode m);
bool mode_uses_paired(TrainMode m);
bool mode_uses_unpaired(TrainMode m);

/// How the LDM penalty enters J. Sum is the plain squared Frobenius norm;
/// Mean divides it by the number of patch-set entries.
enum class PenaltyReduction { Sum, Mean };

std::string to_string(PenaltyReduction r);
PenaltyReduction parse_penalty_reduction(std::string_view name);

struct TrainConfig {
  TrainMode mode = TrainMode::LdmDnSup;
  int epochs = 1;
  int batch_size = 1;
  double lambda = 0.6;
  PenaltyReduction penalty_reduction = PenaltyReduction::Sum;
  double mu_bar = 0.6;
  double bandwidth = 0.0;  // kernel t; 0 = median heuristic per batch
  int knn = 0;
  std::int64_t max_steps = 0;  // 0 = no cap
  std::uint64_t seed = 0;
  int disc_channels = 8;
  AdamConfig adam;
  AdamConfig disc_adam;
  AdnWeights adn;
  SolverOptions solver;

  void validate() const;
};

/// Images are [N,1,H,W]. `x` is artifact-affected in both kinds of sample.
struct UnpairedSample {
  Tensor x;
  Tensor y;  // unrelated artifact-free image
};

struct PairedSample {
  Tensor x;
  Tensor x_gt;
};

struct Batch {
  std::optional<UnpairedSample> unpaired;
  std::optional<PairedSample> paired;
};

struct OptState {
  std::int64_t k = 0;
  DualVariable dual;
};

struct StepReport {
  std::int64_t step = 0;  // k before the step
  int epoch = 0;
  double loss_total = 0.0;  // J = L + lambda * penalty
  std::optional<double> loss_sup;
  std::optional<double> adn_adv_clean;
  std::optional<double> adn_adv_artifact;
  std::optional<double> adn_recon;
  std::optional<double> adn_cycle;
  std::optional<double> adn_artifact;
  std::optional<double> disc_loss;
  std::optional<double> ldm_penalty;       // lambda-weighted
  std::optional<double> dirichlet_energy;  // of U, divided by m
  std::optional<double> cg_residual;
  std::optional<double> dual_min;
  std::optional<double> dual_max;
  std::optional<double> bandwidth;
  std::optional<std::int64_t> patch_count;
};

/// lambda * |U - P_theta + d|_F^2, differentiable through P_theta only.
template <typename T>
BasicTensor<T> ldm_penalty(const Eigen::MatrixXd& u, const BasicTensor<T>& p_theta, const DualVariable& dual,
                           double lambda);

/// Owns the network, the discriminators (unpaired modes) and the optimizer
/// state; executes one outer iteration per training_step call.
class Trainer {
 public:
  Trainer(const GeometryConfig& geom, const TrainConfig& cfg, int base_channels = 8, int max_channels = 32);
  Trainer(std::unique_ptr<DisentangleNet> net, const TrainConfig& cfg);

  /// Atomic: on any error, parameters, optimizer moments, dual and k are
  /// restored and the error is rethrown.
  StepReport training_step(const Batch& batch);

  DisentangleNet& net() { return *net_; }
  const DisentangleNet& net() const { return *net_; }
  PatchDiscriminator<float>* disc_clean() { return disc_clean_.get(); }
  PatchDiscriminator<float>* disc_artifact() { return disc_artifact_.get(); }
  const OptState& state() const { return state_; }
  const TrainConfig& config() const { return cfg_; }
  void set_epoch(int e) { epoch_ = e; }

 private:
  void check_batch(const Batch& batch) const;
  StepReport step_impl(const Batch& batch);

  TrainConfig cfg_;
  std::unique_ptr<DisentangleNet> net_;
  std::unique_ptr<PatchDiscriminator<float>> disc_clean_;
  std::unique_ptr<PatchDiscriminator<float>> disc_artifact_;
  OptState state_;
  int epoch_ = 0;
};

// --- data and scheduling ---------------------------------------------------

/// Sample pools, one image per tensor ([1,1,H,W]).
struct TrainingPools {
  std::vector<Tensor> paired_x;
  std::vector<Tensor> paired_gt;
  std::vector<Tensor> unpaired_artifact;
  std::vector<Tensor> unpaired_clean;
};

/// Per-epoch seeded shuffles of each pool; an epoch lasts until the largest
/// active pool is exhausted, smaller pools wrap around.
class HybridBatchScheduler {
 public:
  HybridBatchScheduler(const TrainingPools& pools, TrainMode mode, int batch_size, std::uint64_t seed);

  std::int64_t steps_per_epoch() const { return steps_; }
  /// Shuffles for epoch `e` (0-based). Must be called before batch().
  void begin_epoch(int e);
  Batch batch(std::int64_t step_in_epoch) const;

  /// Pool indices behind batch(step_in_epoch).
  struct Indices {
    std::vector<std::size_t> paired, artifact, clean;
  };
  Indices indices(std::int64_t step_in_epoch) const;

 private:
  const TrainingPools& pools_;
  TrainMode mode_;
  int bs_;
  std::uint64_t seed_;
  std::int64_t steps_ = 0;
  std::vector<std::size_t> order_paired_, order_artifact_, order_clean_;
};

/// Stacks [1,1,H,W] images into one [N,1,H,W] batch tensor.
Tensor stack_images(const std::vector<const Tensor*>& images);

// --- training loop ---------------------------------------------------------

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const StepReport& r);

struct TrainOutputs {
  std::filesystem::path metrics_csv;    // empty = no log
  std::filesystem::path checkpoint_dir;  // empty = no checkpoints
  int checkpoint_every = 0;              // steps; 0 = final only
};

struct TrainResult {
  std::vector<StepReport> reports;
  std::int64_t steps = 0;
};

/// Runs cfg.epochs epochs (or until cfg.max_steps). On a failing step the CSV
/// is flushed and the error rethrown.
TrainResult train(Trainer& trainer, const TrainingPools& pools, const TrainOutputs& outputs = {},
                  const std::function<void(const StepReport&)>& on_step = {});

}  // namespace ldmdn
