#include "ldmdn/trainer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "ldmdn/checkpoint.hpp"
#include "ldmdn/ops.hpp"
#include "ldmdn/rng.hpp"

namespace ldmdn {

std::string to_string(TrainMode m) {
  switch (m) {
    case TrainMode::Sup: return "Sup";
    case TrainMode::LdmSup: return "LDM-Sup";
    case TrainMode::Adn: return "ADN";
    case TrainMode::LdmDn: return "LDM-DN";
    case TrainMode::AdnSup: return "ADN-Sup";
    case TrainMode::LdmDnSup: return "LDM-DN-Sup";
  }
  return "?";
}

TrainMode parse_train_mode(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const auto want = lower(name);
  for (auto m : {TrainMode::Sup, TrainMode::LdmSup, TrainMode::Adn, TrainMode::LdmDn, TrainMode::AdnSup,
                 TrainMode::LdmDnSup}) {
    if (lower(to_string(m)) == want) return m;
  }
  throw std::invalid_argument("unknown training mode '" + std::string(name) +
                              "' (expected Sup, LDM-Sup, ADN, LDM-DN, ADN-Sup or LDM-DN-Sup)");
}

std::string to_string(PenaltyReduction r) { return r == PenaltyReduction::Sum ? "sum" : "mean"; }

PenaltyReduction parse_penalty_reduction(std::string_view name) {
  if (name == "sum") return PenaltyReduction::Sum;
  if (name == "mean") return PenaltyReduction::Mean;
  throw std::invalid_argument("unknown penalty reduction '" + std::string(name) + "' (expected sum or mean)");
}

NetworkVariant mode_variant(TrainMode m) {
  switch (m) {
    case TrainMode::Sup: return NetworkVariant::Paired;
    case TrainMode::LdmSup: return NetworkVariant::PairedLDM;
    case TrainMode::Adn: return NetworkVariant::Unpaired;
    default: return NetworkVariant::UnpairedLDM;
  }
}

bool mode_uses_manifold(TrainMode m) {
  return m == TrainMode::LdmSup || m == TrainMode::LdmDn || m == TrainMode::LdmDnSup;
}

bool mode_uses_paired(TrainMode m) {
  return m == TrainMode::Sup || m == TrainMode::LdmSup || m == TrainMode::AdnSup || m == TrainMode::LdmDnSup;
}

bool mode_uses_unpaired(TrainMode m) {
  return m == TrainMode::Adn || m == TrainMode::LdmDn || m == TrainMode::AdnSup || m == TrainMode::LdmDnSup;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  if (!(mu_bar > 0.0)) throw std::invalid_argument("mu_bar must be > 0");
  if (!(bandwidth >= 0.0)) throw std::invalid_argument("bandwidth must be >= 0 (0 selects the median heuristic)");
  if (knn < 0) throw std::invalid_argument("knn must be >= 0");
  if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
  if (disc_channels < 1) throw std::invalid_argument("disc_channels must be >= 1");
  if (!(adam.lr > 0.0) || !(disc_adam.lr > 0.0)) throw std::invalid_argument("learning rates must be > 0");
}

template <typename T>
BasicTensor<T> ldm_penalty(const Eigen::MatrixXd& u, const BasicTensor<T>& p_theta, const DualVariable& dual,
                           double lambda) {
  if (p_theta.rank() != 2 || p_theta.dim(0) != u.rows() || p_theta.dim(1) != u.cols()) {
    throw std::invalid_argument("ldm_penalty: patch tensor " + shape_str(p_theta.shape()) + " vs U [" +
                                std::to_string(u.rows()) + ", " + std::to_string(u.cols()) + "]");
  }
  if (dual.values.rows() != u.rows() || dual.values.cols() != u.cols()) {
    throw std::invalid_argument("ldm_penalty: dual shape does not match U");
  }
  const auto m = u.rows(), d = u.cols();
  std::vector<T> target(static_cast<std::size_t>(m * d));
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      target[static_cast<std::size_t>(i * d + j)] = static_cast<T>(u(i, j) + dual.values(i, j));
  const auto c = BasicTensor<T>::from_data({m, d}, std::move(target));
  return scale(frobenius_sq(sub(c, p_theta)), lambda);
}

template Tensor ldm_penalty(const Eigen::MatrixXd&, const Tensor&, const DualVariable&, double);
template TensorD ldm_penalty(const Eigen::MatrixXd&, const TensorD&, const DualVariable&, double);

namespace {

Eigen::MatrixXd to_matrix(const Tensor& t) {
  Eigen::MatrixXd out(t.dim(0), t.dim(1));
  const auto d = t.dim(1);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = t[static_cast<std::size_t>(i * d + j)];
  return out;
}

struct ForwardResult {
  std::optional<BranchOutputs> unpaired;
  std::optional<BranchOutputs> paired;
};

ForwardResult run_forward(const DisentangleNet& net, TrainMode mode, const Batch& b) {
  ForwardResult r;
  if (b.unpaired) r.unpaired = net.forward(b.unpaired->x, b.unpaired->y, ForwardScope::Full);
  if (b.paired) {
    const auto& p = *b.paired;
    switch (mode) {
      case TrainMode::Sup: r.paired = net.forward(p.x, std::nullopt, ForwardScope::Full); break;
      case TrainMode::LdmSup: r.paired = net.forward(p.x, p.x_gt, ForwardScope::Full); break;
      default: r.paired = net.forward(p.x, p.x_gt, ForwardScope::Patches); break;
    }
  }
  return r;
}

std::vector<PatchSource<float>> patch_sources(const ForwardResult& f, const Batch& b) {
  std::vector<PatchSource<float>> s;
  if (f.unpaired) {
    s.push_back({*f.unpaired->x_hat, *f.unpaired->z_x_t, Branch::Corrected});
    s.push_back({b.unpaired->y, *f.unpaired->z_y_t, Branch::Free});
  }
  if (f.paired) {
    s.push_back({*f.paired->x_hat, *f.paired->z_x_t, Branch::Corrected});
    s.push_back({b.paired->x_gt, *f.paired->z_y_t, Branch::Free});
  }
  return s;
}

}  // namespace

Trainer::Trainer(const GeometryConfig& geom, const TrainConfig& cfg, int base_channels, int max_channels)
    : Trainer(std::make_unique<DisentangleNet>(NetworkConfig{geom, mode_variant(cfg.mode), base_channels,
                                                             max_channels, derive_seed(cfg.seed, 101)}),
              cfg) {}

Trainer::Trainer(std::unique_ptr<DisentangleNet> net, const TrainConfig& cfg) : cfg_(cfg), net_(std::move(net)) {
  cfg_.validate();
  if (!net_) throw std::invalid_argument("trainer needs a network");
  if (net_->variant() != mode_variant(cfg_.mode)) {
    throw std::invalid_argument("mode " + to_string(cfg_.mode) + " needs variant " +
                                to_string(mode_variant(cfg_.mode)) + ", network is " + to_string(net_->variant()));
  }
  if (mode_uses_unpaired(cfg_.mode)) {
    disc_clean_ = std::make_unique<PatchDiscriminator<float>>(cfg_.disc_channels, derive_seed(cfg_.seed, 202),
                                                              "disc_clean");
    disc_artifact_ = std::make_unique<PatchDiscriminator<float>>(cfg_.disc_channels, derive_seed(cfg_.seed, 203),
                                                                 "disc_artifact");
  }
}

void Trainer::check_batch(const Batch& b) const {
  const auto mode = cfg_.mode;
  if (mode_uses_unpaired(mode) != b.unpaired.has_value()) {
    throw std::invalid_argument("mode " + to_string(mode) +
                                (b.unpaired ? " takes no unpaired sample" : " needs an unpaired sample"));
  }
  if (mode_uses_paired(mode) != b.paired.has_value()) {
    throw std::invalid_argument("mode " + to_string(mode) +
                                (b.paired ? " takes no paired sample" : " needs a paired sample"));
  }
}

StepReport Trainer::training_step(const Batch& batch) {
  check_batch(batch);
  const auto params_backup = net_->parameters().clone();
  std::optional<BasicParameterStore<float>> dc_backup, da_backup;
  if (disc_clean_) {
    dc_backup = disc_clean_->parameters().clone();
    da_backup = disc_artifact_->parameters().clone();
  }
  const auto state_backup = state_;
  try {
    return step_impl(batch);
  } catch (...) {
    net_->parameters().assign_from(params_backup);
    if (disc_clean_) {
      disc_clean_->parameters().assign_from(*dc_backup);
      disc_artifact_->parameters().assign_from(*da_backup);
    }
    state_ = state_backup;
    throw;
  }
}

StepReport Trainer::step_impl(const Batch& b) {
  StepReport r;
  r.step = state_.k;
  r.epoch = epoch_;
  const auto mode = cfg_.mode;
  const auto& geom = net_->geometry();
  auto& params = net_->parameters();
  params.zero_grad();
  if (disc_clean_) {
    disc_clean_->parameters().zero_grad();
    disc_artifact_->parameters().zero_grad();
  }

  const auto fwd = run_forward(*net_, mode, b);
  Tensor objective;
  if (fwd.unpaired) {
    const auto terms = loss_adn(*fwd.unpaired, b.unpaired->x, b.unpaired->y,
                                AdnDiscriminators<float>{disc_clean_.get(), disc_artifact_.get()}, cfg_.adn);
    r.adn_adv_clean = terms.adv_clean.item();
    r.adn_adv_artifact = terms.adv_artifact.item();
    r.adn_recon = terms.recon.item();
    r.adn_cycle = terms.cycle.item();
    r.adn_artifact = terms.artifact.item();
    objective = terms.total;
  }
  if (fwd.paired) {
    const auto sup = loss_sup(*fwd.paired->x_hat, b.paired->x_gt);
    r.loss_sup = sup.item();
    objective = objective.defined() ? add(objective, sup) : sup;
  }

  Eigen::MatrixXd u;
  if (mode_uses_manifold(mode)) {
    const auto sources = patch_sources(fwd, b);
    const auto p_theta = patch_tensor<float>(sources, geom);
    const Eigen::MatrixXd points = to_matrix(p_theta);
    if (state_.dual.values.rows() != points.rows() || state_.dual.values.cols() != points.cols()) {
      state_.dual.values = Eigen::MatrixXd::Zero(points.rows(), points.cols());
    }
    KernelConfig kc;
    kc.t = cfg_.bandwidth > 0.0 ? cfg_.bandwidth : median_bandwidth(points);
    kc.mu_bar = cfg_.mu_bar;
    kc.knn = cfg_.knn;
    const auto ops = gaussian_weights(points, kc);
    const Eigen::MatrixXd v = points - state_.dual.values;
    SolveReport rep;
    u = solve_coordinates(ops, v, kc, &rep, cfg_.solver);
    double weight = cfg_.lambda;
    if (cfg_.penalty_reduction == PenaltyReduction::Mean) weight /= static_cast<double>(points.size());
    const auto penalty = ldm_penalty(u, p_theta, state_.dual, weight);
    r.ldm_penalty = penalty.item();
    r.dirichlet_energy = dirichlet_energy(u, ops) / static_cast<double>(points.rows());
    r.cg_residual = rep.worst_residual;
    r.bandwidth = kc.t;
    r.patch_count = points.rows();
    objective = add(objective, penalty);
  }

  r.loss_total = objective.item();
  backward(objective);
  params.adam_step(cfg_.adam);

  if (fwd.unpaired) {
    disc_clean_->parameters().zero_grad();
    disc_artifact_->parameters().zero_grad();
    const auto dl = add(discriminator_loss<float>(*disc_clean_, b.unpaired->y, fwd.unpaired->x_hat->detach()),
                        discriminator_loss<float>(*disc_artifact_, b.unpaired->x, fwd.unpaired->y_art->detach()));
    r.disc_loss = dl.item();
    backward(dl);
    disc_clean_->parameters().adam_step(cfg_.disc_adam);
    disc_artifact_->parameters().adam_step(cfg_.disc_adam);
  }

  if (mode_uses_manifold(mode)) {
    NoGradGuard no_grad;
    const auto next = run_forward(*net_, mode, b);
    const auto sources = patch_sources(next, b);
    const auto p_next = build_patch_set<float>(sources, geom);
    DualVariable d_hat{state_.dual.values + u - p_next.points};
    state_.dual = normalize_dual(d_hat);
    r.dual_min = state_.dual.values.minCoeff();
    r.dual_max = state_.dual.values.maxCoeff();
  }

  ++state_.k;
  return r;
}

// --- logging and loop -----------------------------------------------------

void write_metrics_header(std::ostream& os) {
  os << "step,epoch,loss_total,loss_sup,loss_adn_adv_clean,loss_adn_adv_artifact,loss_adn_recon,loss_adn_cycle,"
        "loss_adn_artifact,disc_loss,ldm_penalty,dirichlet_energy,cg_residual,dual_min,dual_max\n";
}

namespace {

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

}  // namespace

void write_metrics_row(std::ostream& os, const StepReport& r) {
  os << r.step << ',' << r.epoch << ',' << fmt_num(r.loss_total) << ',' << fmt_opt(r.loss_sup) << ','
     << fmt_opt(r.adn_adv_clean) << ',' << fmt_opt(r.adn_adv_artifact) << ',' << fmt_opt(r.adn_recon) << ','
     << fmt_opt(r.adn_cycle) << ',' << fmt_opt(r.adn_artifact) << ',' << fmt_opt(r.disc_loss) << ','
     << fmt_opt(r.ldm_penalty) << ',' << fmt_opt(r.dirichlet_energy) << ',' << fmt_opt(r.cg_residual) << ','
     << fmt_opt(r.dual_min) << ',' << fmt_opt(r.dual_max) << '\n';
}

TrainResult train(Trainer& trainer, const TrainingPools& pools, const TrainOutputs& outputs,
                  const std::function<void(const StepReport&)>& on_step) {
  const auto& cfg = trainer.config();
  HybridBatchScheduler scheduler(pools, cfg.mode, cfg.batch_size, derive_seed(cfg.seed, 7));
  std::ofstream csv;
  if (!outputs.metrics_csv.empty()) {
    if (outputs.metrics_csv.has_parent_path()) std::filesystem::create_directories(outputs.metrics_csv.parent_path());
    csv.open(outputs.metrics_csv, std::ios::binary | std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write metrics log " + outputs.metrics_csv.string());
    write_metrics_header(csv);
  }
  auto checkpoint = [&](const std::string& tag) {
    if (outputs.checkpoint_dir.empty()) return;
    save_checkpoint(trainer.net(), outputs.checkpoint_dir / tag);
  };

  TrainResult result;
  bool capped = false;
  for (int e = 0; e < cfg.epochs && !capped; ++e) {
    scheduler.begin_epoch(e);
    trainer.set_epoch(e + 1);
    for (std::int64_t s = 0; s < scheduler.steps_per_epoch(); ++s) {
      if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) {
        capped = true;
        break;
      }
      StepReport rep;
      try {
        rep = trainer.training_step(scheduler.batch(s));
      } catch (...) {
        if (csv) csv.flush();
        throw;
      }
      ++result.steps;
      if (csv) write_metrics_row(csv, rep);
      if (on_step) on_step(rep);
      result.reports.push_back(rep);
      if (outputs.checkpoint_every > 0 && result.steps % outputs.checkpoint_every == 0) {
        checkpoint("step_" + std::to_string(result.steps));
      }
    }
  }
  checkpoint("final");
  return result;
}

}  // namespace ldmdn
