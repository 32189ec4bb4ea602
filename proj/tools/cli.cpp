#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "ldmdn/checkpoint.hpp"
#include "ldmdn/dataset.hpp"
#include "ldmdn/diagnostics.hpp"
#include "ldmdn/recover.hpp"
#include "ldmdn/rng.hpp"
#include "ldmdn/tensor.hpp"
#include "ldmdn/trainer.hpp"

namespace ldmdn::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Options shared by every subcommand plus the flag -> config key bindings.
struct Invocation {
  std::string config_file;
  std::vector<std::string> sets;
  struct Binding {
    std::string key;
    std::string value;
    CLI::Option* option = nullptr;
    bool is_flag = false;
    bool flag_value = false;
  };
  std::deque<Binding> bindings;
};

void add_common(CLI::App* sub, Invocation& inv) {
  sub->add_option("-c,--config", inv.config_file, "INI config file applied before flags");
  sub->add_option("--set", inv.sets, "Override a config key, e.g. --set train.lambda=0.3")->take_all();
}

void bind(CLI::App* sub, Invocation& inv, const std::string& flag, const std::string& key, const std::string& help) {
  auto& b = inv.bindings.emplace_back();
  b.key = key;
  b.option = sub->add_option(flag, b.value, help + " [" + key + "]");
}

void bind_flag(CLI::App* sub, Invocation& inv, const std::string& flag, const std::string& key,
               const std::string& help) {
  auto& b = inv.bindings.emplace_back();
  b.key = key;
  b.is_flag = true;
  b.option = sub->add_flag(flag, b.flag_value, help + " [" + key + "]");
}

/// defaults < config file < LDMDN_OUTPUT_ROOT < --set < dedicated flags.
RunConfig resolve(const Invocation& inv) {
  RunConfig cfg;
  if (!inv.config_file.empty()) load_config_file(cfg, inv.config_file);
  if (const char* root = std::getenv("LDMDN_OUTPUT_ROOT"); root != nullptr && *root != '\0') {
    cfg.output_root = root;
  }
  for (const auto& s : inv.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& b : inv.bindings) {
    if (b.option->count() == 0) continue;
    set_value(cfg, b.key, b.is_flag ? (b.flag_value ? "true" : "false") : b.value);
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

void write_resolved(const fs::path& dir, const RunConfig& cfg) { write_text(dir / "resolved.ini", format_config(cfg)); }

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Dataset open_dataset(const RunConfig& cfg) {
  const auto dir = dataset_path(cfg);
  if (!fs::exists(dir / "manifest.txt")) {
    throw std::runtime_error("dataset not found: " + dir.string() + " (run `ldmdn synth` first)");
  }
  return read_dataset(dir);
}

// --- synth -----------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  if (cfg.pairs < 1) throw UsageError("--pairs must be at least 1");
  if (cfg.test_pairs < 0) throw UsageError("--test-pairs must be non-negative");
  try {
    cfg.data.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto dir = dataset_path(cfg);
  const auto ds = synthesize_dataset(cfg.pairs, cfg.test_pairs, cfg.data);
  write_dataset(ds, dir);
  write_resolved(dir, cfg);
  out << "synthesized " << ds.train.size() << " training and " << ds.test.size() << " test pairs ("
      << cfg.data.image_size << "x" << cfg.data.image_size << ", " << cfg.data.n_views << " views) into "
      << dir.string() << "\n";
  out << "unpaired pools: " << ds.pool_artifact.size() << " artifact-affected, " << ds.pool_clean.size()
      << " artifact-free (ratio " << cfg.data.ratio << ")\n";
  return kExitOk;
}

// --- train -----------------------------------------------------------------

void check_geometry(const GeometryConfig& g, int image_size, const std::string& what) {
  if (g.image_h != image_size || g.image_w != image_size) {
    throw std::runtime_error("geometry mismatch: " + what + " is " + std::to_string(g.image_h) + "x" +
                             std::to_string(g.image_w) + " but the dataset holds " + std::to_string(image_size) +
                             "x" + std::to_string(image_size) + " images");
  }
}

void print_report(std::ostream& out, const StepReport& r) {
  out << "step " << r.step + 1 << " (epoch " << r.epoch << "): total " << num(r.loss_total);
  auto item = [&](const char* name, const std::optional<double>& v) {
    if (v) out << ", " << name << " " << num(*v);
  };
  item("sup", r.loss_sup);
  item("adv_clean", r.adn_adv_clean);
  item("adv_artifact", r.adn_adv_artifact);
  item("recon", r.adn_recon);
  item("cycle", r.adn_cycle);
  item("artifact", r.adn_artifact);
  item("disc", r.disc_loss);
  item("ldm", r.ldm_penalty);
  item("energy", r.dirichlet_energy);
  out << "\n";
}

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.geometry.validate();
    cfg.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (cfg.checkpoint_every < 0) throw UsageError("train.checkpoint_every must be non-negative");
  const auto mode = cfg.train.mode;
  if (!mode_uses_manifold(mode) && cfg.train.lambda != 0.0) {
    err << "warning: lambda = " << cfg.train.lambda << " is ignored in mode " << to_string(mode)
        << " (no manifold term)\n";
  }

  const auto ds = open_dataset(cfg);
  check_geometry(cfg.geometry, ds.cfg.image_size, "the configured network");
  if (mode_uses_paired(mode) && ds.train.empty()) {
    throw std::runtime_error("mode " + to_string(mode) + " needs paired samples but the dataset has none");
  }
  if (mode_uses_unpaired(mode) && (ds.pool_artifact.empty() || ds.pool_clean.empty())) {
    throw std::runtime_error("mode " + to_string(mode) + " needs both unpaired pools but the dataset has " +
                             std::to_string(ds.pool_artifact.size()) + " artifact-affected and " +
                             std::to_string(ds.pool_clean.size()) + " artifact-free images");
  }
  const auto pools = make_training_pools(ds);

  const auto dir = run_path(cfg);
  fs::create_directories(dir);
  write_resolved(dir, cfg);

  Trainer trainer(cfg.geometry, cfg.train, cfg.base_channels, cfg.max_channels);
  TrainOutputs outputs{dir / "metrics.csv", dir / "checkpoints", cfg.checkpoint_every};
  out << "training " << to_string(mode) << " for " << cfg.train.epochs << " epoch(s) on " << ds.train.size()
      << " pairs; outputs in " << dir.string() << "\n";
  const auto result = train(trainer, pools, outputs, [&](const StepReport& r) {
    if ((r.step + 1) % 50 == 0) print_report(out, r);
  });
  out << "finished " << result.steps << " step(s)\n";
  if (!result.reports.empty()) {
    out << "final ";
    print_report(out, result.reports.back());
  }
  out << "checkpoint: " << (dir / "checkpoints" / "final").string() << "\n";
  return kExitOk;
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  if (!(cfg.eval_peak > 0.0)) throw UsageError("eval.peak must be positive");
  const auto ds = open_dataset(cfg);
  if (ds.test.empty()) throw std::runtime_error("dataset " + dataset_path(cfg).string() + " has no test pairs");

  std::unique_ptr<DisentangleNet> net;
  if (!cfg.eval_pass_through) {
    const auto ckpt = checkpoint_path(cfg);
    if (!fs::exists(ckpt / "manifest.txt")) throw std::runtime_error("checkpoint not found: " + ckpt.string());
    net = load_checkpoint(ckpt);
    check_geometry(net->geometry(), ds.cfg.image_size, "checkpoint " + ckpt.string());
  }

  const auto summary = evaluate(net.get(), ds.test, cfg.eval_clean_input, cfg.eval_peak);
  const auto dir = run_path(cfg) / "eval";
  fs::create_directories(dir);
  write_resolved(dir, cfg);
  std::ostringstream csv;
  write_eval_csv(csv, summary);
  write_text(dir / "eval.csv", csv.str());

  out << "index  psnr_in   ssim_in  psnr_out  ssim_out\n";
  for (const auto& r : summary.rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%5zu  %8s  %7s  %8s  %7s\n", r.index, num(r.psnr_in).c_str(),
                  num(r.ssim_in).c_str(), num(r.psnr_out).c_str(), num(r.ssim_out).c_str());
    out << line;
  }
  out << "mean   " << num(summary.mean_psnr_in) << "  " << num(summary.mean_ssim_in) << "  "
      << num(summary.mean_psnr_out) << "  " << num(summary.mean_ssim_out) << "\n";
  out << "wrote " << (dir / "eval.csv").string() << "\n";
  return kExitOk;
}

// --- recover ---------------------------------------------------------------

int cmd_recover(const RunConfig& cfg, std::ostream& out) {
  try {
    cfg.recover.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(cfg.recover_fraction > 0.0 && cfg.recover_fraction <= 1.0)) {
    throw UsageError("recover.fraction must lie in (0, 1]");
  }

  Image image;
  std::optional<Image> truth;
  if (cfg.recover_image.empty()) {
    image = smooth_phantom(cfg.data.image_size, cfg.recover_seed);
    truth = image;
  } else {
    image = load_image(cfg.recover_image);
  }
  if (!cfg.recover_truth.empty()) truth = load_image(cfg.recover_truth);

  Mask known;
  if (cfg.recover_mask.empty()) {
    known = random_mask(static_cast<int>(image.rows()), static_cast<int>(image.cols()), cfg.recover_fraction,
                        derive_seed(cfg.recover_seed, 1));
  } else {
    const auto m = load_image(cfg.recover_mask);
    if (m.rows() != image.rows() || m.cols() != image.cols()) {
      throw std::runtime_error("mask and image sizes differ");
    }
    known = m.array() != 0.0;
  }
  if (truth && (truth->rows() != image.rows() || truth->cols() != image.cols())) {
    throw std::runtime_error("ground truth and image sizes differ");
  }
  if (known.count() == 0) throw std::runtime_error("the mask marks no known pixels");

  const auto initial = mean_fill(image, known);
  const auto result = recover_image(image, known, cfg.recover);

  const auto dir = fs::path(cfg.output_root) / "recover";
  fs::create_directories(dir);
  write_resolved(dir, cfg);
  save_image(dir / "initial.f32", initial);
  write_pgm(dir / "initial.pgm", initial);
  save_image(dir / "recovered.f32", result.image);
  write_pgm(dir / "recovered.pgm", result.image);

  std::ostringstream log;
  log << "iteration,relative_change\n";
  for (std::size_t i = 0; i < result.changes.size(); ++i) {
    char line[64];
    std::snprintf(line, sizeof line, "%zu,%.9g\n", i + 1, result.changes[i]);
    log << line;
  }
  write_text(dir / "recover.csv", log.str());

  out << "known pixels: " << known.count() << " of " << known.size() << "\n";
  out << "iterations: " << result.iterations << ", last relative change " << result.last_change << "\n";
  if (truth) {
    const double p0 = psnr(initial, *truth);
    const double p1 = psnr(result.image, *truth);
    std::ostringstream summary;
    summary << "psnr_initial,psnr_recovered,gain\n" << num(p0) << "," << num(p1) << "," << num(p1 - p0) << "\n";
    write_text(dir / "psnr.csv", summary.str());
    out << "psnr mean-fill " << num(p0) << " dB, recovered " << num(p1) << " dB, gain " << num(p1 - p0) << " dB\n";
  }
  out << "wrote " << (dir / "recovered.f32").string() << "\n";
  return kExitOk;
}

// --- diag ------------------------------------------------------------------

int cmd_diag(const RunConfig& cfg, std::ostream& out) {
  if (cfg.diag_points < 4) throw UsageError("diag.points must be at least 4");
  DiagOptions opts;
  opts.seed = cfg.diag_seed;
  opts.points = cfg.diag_points;
  opts.inject_asymmetry = cfg.diag_inject_asymmetry;
  const auto checks = run_diagnostics(opts);
  std::ostringstream report;
  print_diagnostics(report, checks);

  const auto dir = fs::path(cfg.output_root) / "diag";
  fs::create_directories(dir);
  write_resolved(dir, cfg);
  write_text(dir / "report.txt", report.str());
  out << report.str();

  std::size_t failed = 0;
  for (const auto& c : checks) failed += c.pass ? 0 : 1;
  out << (failed == 0 ? "all " + std::to_string(checks.size()) + " checks passed\n"
                      : std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed\n");
  return failed == 0 ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Manifold-regularized disentanglement networks for CT metal artifact reduction"};
  app.name("ldmdn");
  app.require_subcommand(1);

  Invocation synth_inv, train_inv, eval_inv, recover_inv, diag_inv;

  auto* synth = app.add_subcommand("synth", "Synthesize a CT metal-artifact dataset");
  add_common(synth, synth_inv);
  bind(synth, synth_inv, "--pairs", "synth.pairs", "Training pairs");
  bind(synth, synth_inv, "--test-pairs", "synth.test_pairs", "Held-out test pairs");
  bind(synth, synth_inv, "--seed", "synth.seed", "Dataset seed");
  bind(synth, synth_inv, "--size", "synth.image_size", "Image side length");
  bind(synth, synth_inv, "--views", "synth.n_views", "Projection views");
  bind(synth, synth_inv, "--severity", "synth.severity", "Metal corruption severity");
  bind(synth, synth_inv, "--noise", "synth.noise", "Relative noise level");
  bind(synth, synth_inv, "--ratio", "synth.ratio", "Fraction of pairs in the unpaired artifact pool");
  bind(synth, synth_inv, "-o,--out", "paths.dataset", "Dataset directory");

  auto* train_cmd = app.add_subcommand("train", "Train a network in one of the six modes");
  add_common(train_cmd, train_inv);
  bind(train_cmd, train_inv, "--mode", "train.mode", "Sup, LDM-Sup, ADN, LDM-DN, ADN-Sup or LDM-DN-Sup");
  bind(train_cmd, train_inv, "--epochs", "train.epochs", "Epochs");
  bind(train_cmd, train_inv, "--batch-size", "train.batch_size", "Images per pool and step");
  bind(train_cmd, train_inv, "--lambda", "train.lambda", "LDM penalty weight");
  bind(train_cmd, train_inv, "--penalty-reduction", "train.penalty_reduction", "sum or mean");
  bind(train_cmd, train_inv, "--mu-bar", "kernel.mu_bar", "Manifold solve weight");
  bind(train_cmd, train_inv, "--knn", "kernel.knn", "Nearest neighbours per point (0 = dense)");
  bind(train_cmd, train_inv, "--lr", "adam.lr", "Generator learning rate");
  bind(train_cmd, train_inv, "--max-steps", "train.max_steps", "Step cap (0 = none)");
  bind(train_cmd, train_inv, "--seed", "train.seed", "Training seed");
  bind(train_cmd, train_inv, "--checkpoint-every", "train.checkpoint_every", "Checkpoint period in steps");
  bind(train_cmd, train_inv, "--data", "paths.dataset", "Dataset directory");
  bind(train_cmd, train_inv, "-o,--out", "paths.run", "Run directory");

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on the test split");
  add_common(eval_cmd, eval_inv);
  bind(eval_cmd, eval_inv, "--checkpoint", "paths.checkpoint", "Checkpoint directory");
  bind(eval_cmd, eval_inv, "--data", "paths.dataset", "Dataset directory");
  bind(eval_cmd, eval_inv, "-o,--out", "paths.run", "Run directory (results go to <run>/eval)");
  bind(eval_cmd, eval_inv, "--peak", "eval.peak", "PSNR/SSIM peak value");
  bind_flag(eval_cmd, eval_inv, "--pass-through", "eval.pass_through", "Score the network input itself");
  bind_flag(eval_cmd, eval_inv, "--clean-input", "eval.clean_input", "Feed the clean images instead");

  auto* recover_cmd = app.add_subcommand("recover", "Pixel-patch manifold recovery from sparse samples");
  add_common(recover_cmd, recover_inv);
  bind(recover_cmd, recover_inv, "--image", "recover.image", "Observed image (.f32); default synthetic phantom");
  bind(recover_cmd, recover_inv, "--mask", "recover.mask", "Known-pixel mask (.f32, nonzero = known)");
  bind(recover_cmd, recover_inv, "--truth", "recover.truth", "Ground truth (.f32) for the PSNR report");
  bind(recover_cmd, recover_inv, "--fraction", "recover.fraction", "Known fraction for the random mask");
  bind(recover_cmd, recover_inv, "--seed", "recover.seed", "Phantom and mask seed");
  bind(recover_cmd, recover_inv, "--max-iterations", "recover.max_iterations", "Iteration cap");
  bind(recover_cmd, recover_inv, "-o,--out", "paths.output_root", "Output root (results go to <root>/recover)");

  auto* diag_cmd = app.add_subcommand("diag", "Run the graph, solver and gradient invariant checks");
  add_common(diag_cmd, diag_inv);
  bind(diag_cmd, diag_inv, "--seed", "diag.seed", "Fixture seed");
  bind(diag_cmd, diag_inv, "--points", "diag.points", "Points per random graph");
  bind_flag(diag_cmd, diag_inv, "--inject-asymmetry", "diag.inject_asymmetry",
            "Perturb one weight (negative control)");
  bind(diag_cmd, diag_inv, "-o,--out", "paths.output_root", "Output root (report goes to <root>/diag)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run `ldmdn --help` for usage\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(resolve(synth_inv), out);
    if (train_cmd->parsed()) return cmd_train(resolve(train_inv), out, err);
    if (eval_cmd->parsed()) return cmd_eval(resolve(eval_inv), out);
    if (recover_cmd->parsed()) return cmd_recover(resolve(recover_inv), out);
    if (diag_cmd->parsed()) return cmd_diag(resolve(diag_inv), out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace ldmdn::cli
