#include "config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ldmdn::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename V>
V parse_number(const std::string& text, const std::string& what) {
  V out{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError(what + ": cannot parse '" + text + "'");
  }
  return out;
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ConfigError(what + ": expected a boolean, got '" + text + "'");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename V>
std::string fmt_int(V v) {
  return std::to_string(v);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

ConfigKey make(std::string section, std::string key, Setter set, Getter get) {
  return {std::move(section), std::move(key), std::move(set), std::move(get)};
}

#define LDMDN_DOUBLE(SECTION, KEY, EXPR)                                                                     \
  make(SECTION, KEY, [](RunConfig& c, const std::string& v) { EXPR = parse_number<double>(v, SECTION "." KEY); }, \
       [](const RunConfig& c) { return fmt(EXPR); })
#define LDMDN_INT(SECTION, KEY, EXPR)                                                                        \
  make(SECTION, KEY, [](RunConfig& c, const std::string& v) { EXPR = parse_number<int>(v, SECTION "." KEY); },    \
       [](const RunConfig& c) { return fmt_int(EXPR); })
#define LDMDN_U64(SECTION, KEY, EXPR)                                                                        \
  make(SECTION, KEY,                                                                                         \
       [](RunConfig& c, const std::string& v) { EXPR = parse_number<std::uint64_t>(v, SECTION "." KEY); },   \
       [](const RunConfig& c) { return fmt_int(EXPR); })
#define LDMDN_BOOL(SECTION, KEY, EXPR)                                                                       \
  make(SECTION, KEY, [](RunConfig& c, const std::string& v) { EXPR = parse_bool(v, SECTION "." KEY); },         \
       [](const RunConfig& c) { return std::string(EXPR ? "true" : "false"); })
#define LDMDN_STR(SECTION, KEY, EXPR)                                                                        \
  make(SECTION, KEY, [](RunConfig& c, const std::string& v) { EXPR = v; }, [](const RunConfig& c) { return EXPR; })

std::vector<ConfigKey> build_keys() {
  std::vector<ConfigKey> k;
  k.push_back(LDMDN_INT("geometry", "image_h", c.geometry.image_h));
  k.push_back(LDMDN_INT("geometry", "image_w", c.geometry.image_w));
  k.push_back(LDMDN_INT("geometry", "s", c.geometry.s));
  k.push_back(LDMDN_INT("network", "base_channels", c.base_channels));
  k.push_back(LDMDN_INT("network", "max_channels", c.max_channels));

  k.push_back(make(
      "train", "mode",
      [](RunConfig& c, const std::string& v) {
        try {
          c.train.mode = parse_train_mode(v);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("train.mode: ") + e.what());
        }
      },
      [](const RunConfig& c) { return to_string(c.train.mode); }));
  k.push_back(LDMDN_INT("train", "epochs", c.train.epochs));
  k.push_back(LDMDN_INT("train", "batch_size", c.train.batch_size));
  k.push_back(LDMDN_DOUBLE("train", "lambda", c.train.lambda));
  k.push_back(make(
      "train", "penalty_reduction",
      [](RunConfig& c, const std::string& v) {
        try {
          c.train.penalty_reduction = parse_penalty_reduction(v);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("train.penalty_reduction: ") + e.what());
        }
      },
      [](const RunConfig& c) { return to_string(c.train.penalty_reduction); }));
  k.push_back(make(
      "train", "max_steps",
      [](RunConfig& c, const std::string& v) { c.train.max_steps = parse_number<std::int64_t>(v, "train.max_steps"); },
      [](const RunConfig& c) { return fmt_int(c.train.max_steps); }));
  k.push_back(LDMDN_U64("train", "seed", c.train.seed));
  k.push_back(LDMDN_INT("train", "checkpoint_every", c.checkpoint_every));
  k.push_back(LDMDN_INT("train", "disc_channels", c.train.disc_channels));

  k.push_back(LDMDN_DOUBLE("kernel", "mu_bar", c.train.mu_bar));
  k.push_back(LDMDN_DOUBLE("kernel", "bandwidth", c.train.bandwidth));
  k.push_back(LDMDN_INT("kernel", "knn", c.train.knn));
  k.push_back(LDMDN_DOUBLE("solver", "tolerance", c.train.solver.tolerance));
  k.push_back(LDMDN_INT("solver", "max_iterations", c.train.solver.max_iterations));

  k.push_back(LDMDN_DOUBLE("adam", "lr", c.train.adam.lr));
  k.push_back(make(
      "adam", "beta1",
      [](RunConfig& c, const std::string& v) { c.train.adam.beta1 = c.train.disc_adam.beta1 = parse_number<double>(v, "adam.beta1"); },
      [](const RunConfig& c) { return fmt(c.train.adam.beta1); }));
  k.push_back(make(
      "adam", "beta2",
      [](RunConfig& c, const std::string& v) { c.train.adam.beta2 = c.train.disc_adam.beta2 = parse_number<double>(v, "adam.beta2"); },
      [](const RunConfig& c) { return fmt(c.train.adam.beta2); }));
  k.push_back(make(
      "adam", "eps",
      [](RunConfig& c, const std::string& v) { c.train.adam.eps = c.train.disc_adam.eps = parse_number<double>(v, "adam.eps"); },
      [](const RunConfig& c) { return fmt(c.train.adam.eps); }));
  k.push_back(LDMDN_DOUBLE("adam", "disc_lr", c.train.disc_adam.lr));

  k.push_back(LDMDN_DOUBLE("adn", "adv_clean", c.train.adn.adv_clean));
  k.push_back(LDMDN_DOUBLE("adn", "adv_artifact", c.train.adn.adv_artifact));
  k.push_back(LDMDN_DOUBLE("adn", "recon", c.train.adn.recon));
  k.push_back(LDMDN_DOUBLE("adn", "cycle", c.train.adn.cycle));
  k.push_back(LDMDN_DOUBLE("adn", "artifact", c.train.adn.artifact));

  k.push_back(LDMDN_INT("synth", "pairs", c.pairs));
  k.push_back(LDMDN_INT("synth", "test_pairs", c.test_pairs));
  k.push_back(LDMDN_INT("synth", "image_size", c.data.image_size));
  k.push_back(LDMDN_INT("synth", "n_views", c.data.n_views));
  k.push_back(LDMDN_DOUBLE("synth", "severity", c.data.severity));
  k.push_back(LDMDN_DOUBLE("synth", "noise", c.data.noise));
  k.push_back(LDMDN_DOUBLE("synth", "ratio", c.data.ratio));
  k.push_back(LDMDN_U64("synth", "seed", c.data.seed));

  k.push_back(LDMDN_INT("recover", "patch", c.recover.patch));
  k.push_back(LDMDN_INT("recover", "stride", c.recover.stride));
  k.push_back(LDMDN_DOUBLE("recover", "mu_bar", c.recover.mu_bar));
  k.push_back(LDMDN_DOUBLE("recover", "bandwidth", c.recover.bandwidth));
  k.push_back(LDMDN_INT("recover", "knn", c.recover.knn));
  k.push_back(LDMDN_INT("recover", "max_iterations", c.recover.max_iterations));
  k.push_back(LDMDN_DOUBLE("recover", "tolerance", c.recover.tolerance));
  k.push_back(LDMDN_DOUBLE("recover", "fraction", c.recover_fraction));
  k.push_back(LDMDN_U64("recover", "seed", c.recover_seed));
  k.push_back(LDMDN_STR("recover", "image", c.recover_image));
  k.push_back(LDMDN_STR("recover", "mask", c.recover_mask));
  k.push_back(LDMDN_STR("recover", "truth", c.recover_truth));

  k.push_back(LDMDN_DOUBLE("eval", "peak", c.eval_peak));
  k.push_back(LDMDN_BOOL("eval", "pass_through", c.eval_pass_through));
  k.push_back(LDMDN_BOOL("eval", "clean_input", c.eval_clean_input));
  k.push_back(LDMDN_U64("diag", "seed", c.diag_seed));
  k.push_back(LDMDN_INT("diag", "points", c.diag_points));
  k.push_back(LDMDN_BOOL("diag", "inject_asymmetry", c.diag_inject_asymmetry));

  k.push_back(LDMDN_STR("paths", "output_root", c.output_root));
  k.push_back(LDMDN_STR("paths", "dataset", c.dataset_dir));
  k.push_back(LDMDN_STR("paths", "run", c.run_dir));
  k.push_back(LDMDN_STR("paths", "checkpoint", c.checkpoint_dir));
  return k;
}

#undef LDMDN_DOUBLE
#undef LDMDN_INT
#undef LDMDN_U64
#undef LDMDN_STR
#undef LDMDN_BOOL

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = build_keys();
  return keys;
}

void set_value(RunConfig& cfg, const std::string& dotted, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.full_name() == dotted) {
      k.set(cfg, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key '" + dotted + "'");
}

void parse_config(RunConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(where + "key '" + key + "' outside of a [section]");
    try {
      set_value(cfg, section + "." + key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  parse_config(cfg, ss.str(), path.string());
}

std::string format_config(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.key << " = " << k.get(cfg) << '\n';
  }
  return out.str();
}

std::filesystem::path dataset_path(const RunConfig& cfg) {
  return cfg.dataset_dir.empty() ? std::filesystem::path(cfg.output_root) / "dataset"
                                 : std::filesystem::path(cfg.dataset_dir);
}

std::filesystem::path run_path(const RunConfig& cfg) {
  return cfg.run_dir.empty() ? std::filesystem::path(cfg.output_root) / "run" : std::filesystem::path(cfg.run_dir);
}

std::filesystem::path checkpoint_path(const RunConfig& cfg) {
  return cfg.checkpoint_dir.empty() ? run_path(cfg) / "checkpoints" / "final"
                                    : std::filesystem::path(cfg.checkpoint_dir);
}

}  // namespace ldmdn::cli
