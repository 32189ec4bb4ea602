#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldmdn/dataset.hpp"
#include "ldmdn/network.hpp"
#include "ldmdn/recover.hpp"
#include "ldmdn/trainer.hpp"

namespace ldmdn::cli {

/// Every tunable of a run. Serialised as `[section]` blocks of `key = value`.
struct RunConfig {
  GeometryConfig geometry;
  int base_channels = 8;
  int max_channels = 32;

  TrainConfig train;
  int checkpoint_every = 0;

  DatasetConfig data;
  int pairs = 16;
  int test_pairs = 8;

  RecoverConfig recover;
  double recover_fraction = 0.1;
  std::uint64_t recover_seed = 0;
  std::string recover_image;  // empty = synthetic smooth phantom
  std::string recover_mask;   // empty = seeded random mask
  std::string recover_truth;  // optional ground truth for the PSNR report

  double eval_peak = 1.0;
  bool eval_pass_through = false;
  bool eval_clean_input = false;
  std::uint64_t diag_seed = 0;
  int diag_points = 40;
  bool diag_inject_asymmetry = false;

  std::string output_root = "ldmdn_out";
  std::string dataset_dir;     // default <output_root>/dataset
  std::string run_dir;         // default <output_root>/run
  std::string checkpoint_dir;  // default <run_dir>/checkpoints/final
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfigKey {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;

  std::string full_name() const { return section + "." + key; }
};

const std::vector<ConfigKey>& config_keys();

/// Sets `section.key`; unknown keys and malformed values throw ConfigError.
void set_value(RunConfig& cfg, const std::string& dotted, const std::string& value);

/// Applies an INI text on top of `cfg`.
void parse_config(RunConfig& cfg, const std::string& text, const std::string& origin = "<config>");
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Fully resolved config; feeding it back through parse_config reproduces `cfg`.
std::string format_config(const RunConfig& cfg);

std::filesystem::path dataset_path(const RunConfig& cfg);
std::filesystem::path run_path(const RunConfig& cfg);
std::filesystem::path checkpoint_path(const RunConfig& cfg);

}  // namespace ldmdn::cli
