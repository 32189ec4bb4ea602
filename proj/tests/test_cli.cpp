#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "config.hpp"
#include "doctest.h"

using namespace ldmdn;
using namespace ldmdn::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ldmdn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ldmdn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 32 x 32 images, narrow network.
const std::vector<std::string> kSmall{"--set", "synth.image_size=32", "--set", "synth.n_views=60"};
const std::vector<std::string> kSmallNet{"--set", "geometry.image_h=32", "--set", "geometry.image_w=32",
                                         "--set", "network.base_channels=4", "--set", "network.max_channels=8",
                                         "--set", "train.disc_channels=4"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("config text round-trips through format and parse") {
  RunConfig cfg;
  set_value(cfg, "train.mode", "ADN-Sup");
  set_value(cfg, "train.lambda", "0.1");
  set_value(cfg, "synth.seed", "18446744073709551615");
  set_value(cfg, "eval.clean_input", "true");
  set_value(cfg, "paths.dataset", "some/where");
  const auto text = format_config(cfg);
  RunConfig back;
  parse_config(back, text);
  CHECK(format_config(back) == text);
  CHECK(back.train.mode == TrainMode::AdnSup);
  CHECK(back.train.lambda == 0.1);
  CHECK(back.data.seed == 18446744073709551615ULL);
  CHECK(back.eval_clean_input);
  CHECK(back.dataset_dir == "some/where");
  for (const auto& k : config_keys()) CHECK(text.find(k.key + " = ") != std::string::npos);
}

TEST_CASE("config parsing rejects unknown keys and bad values with a location") {
  RunConfig cfg;
  try {
    parse_config(cfg, "[train]\nepochs = 3\n\n[train]\nepoch = 4\n", "run.ini");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.ini:5") != std::string::npos);
    CHECK(std::string(e.what()).find("train.epoch") != std::string::npos);
  }
  CHECK(cfg.train.epochs == 3);
  CHECK_THROWS_AS(parse_config(cfg, "[train]\nepochs = 3x\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg, "epochs = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg, "[train\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg, "[train]\nmode = fancy\n"), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg, "[eval]\npass_through = maybe\n"), ConfigError);
  CHECK_NOTHROW(parse_config(cfg, "# comment\n[adam]\nlr = 0.002 ; trailing\n"));
  CHECK(cfg.train.adam.lr == 0.002);
}

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  const auto zero = run({"synth", "--pairs", "0"});
  CHECK(zero.code == kExitUsage);
  CHECK(zero.err.find("--pairs") != std::string::npos);
  CHECK(run({"train", "--set", "train.nonsense=1"}).code == kExitUsage);
  CHECK(run({"train", "--mode", "Fancy"}).code == kExitUsage);
  CHECK(run({"diag", "--config", "/nonexistent/cfg.ini"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("synth is reproducible and records the pool ratio") {
  const auto dir = scratch("synth");
  const auto a = run(cat({"synth", "--pairs", "3", "--test-pairs", "1", "--seed", "7", "-o", (dir / "a").string()}, kSmall));
  const auto b = run(cat({"synth", "--pairs", "3", "--test-pairs", "1", "--seed", "7", "-o", (dir / "b").string()}, kSmall));
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);
  const auto manifest = slurp(dir / "a" / "manifest.txt");
  CHECK(manifest == slurp(dir / "b" / "manifest.txt"));
  CHECK(manifest.find("ratio 0.14999999999999999\n") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "resolved.ini"));
  fs::remove_all(dir);
}

TEST_CASE("flags beat --set, which beats the config file; the env var sets the output root") {
  const auto dir = scratch("precedence");
  {
    std::ofstream os(dir / "cfg.ini");
    os << "[synth]\npairs = 5\nseed = 1\ntest_pairs = 0\nimage_size = 32\nn_views = 30\n";
  }
  ::setenv("LDMDN_OUTPUT_ROOT", (dir / "root").string().c_str(), 1);
  const auto r = run({"synth", "--config", (dir / "cfg.ini").string(), "--set", "synth.seed=2", "--set",
                      "synth.pairs=4", "--pairs", "2"});
  ::unsetenv("LDMDN_OUTPUT_ROOT");
  REQUIRE(r.code == kExitOk);
  RunConfig resolved;
  load_config_file(resolved, dir / "root" / "dataset" / "resolved.ini");
  CHECK(resolved.pairs == 2);
  CHECK(resolved.data.seed == 2);
  CHECK(resolved.data.n_views == 30);
  CHECK(resolved.output_root == (dir / "root").string());
  fs::remove_all(dir);
}

TEST_CASE("train, eval and the resolved-config echo") {
  const auto dir = scratch("pipeline");
  const auto data = (dir / "data").string();
  REQUIRE(run(cat({"synth", "--pairs", "4", "--test-pairs", "2", "--seed", "3", "-o", data}, kSmall)).code == kExitOk);

  const auto missing = run({"train", "--data", (dir / "nope").string()});
  CHECK(missing.code == kExitRuntime);
  CHECK(missing.err.find((dir / "nope").string()) != std::string::npos);

  const auto mismatch = run({"train", "--data", data, "-o", (dir / "bad").string()});
  CHECK(mismatch.code == kExitRuntime);
  CHECK(mismatch.err.find("geometry") != std::string::npos);

  const auto run1 = (dir / "run1").string();
  const auto t = run(cat({"train", "--mode", "LDM-DN-Sup", "--epochs", "1", "--data", data, "-o", run1}, kSmallNet));
  REQUIRE(t.code == kExitOk);
  CHECK(t.err.empty());
  CHECK(t.out.find("final step") != std::string::npos);
  const auto metrics = slurp(dir / "run1" / "metrics.csv");
  CHECK(metrics.find("ldm_penalty") != std::string::npos);
  CHECK(fs::exists(dir / "run1" / "checkpoints" / "final" / "manifest.txt"));

  // Feeding the written config back reproduces the run.
  const auto run2 = (dir / "run2").string();
  const auto again = run({"train", "--config", (dir / "run1" / "resolved.ini").string(), "-o", run2});
  REQUIRE(again.code == kExitOk);
  CHECK(slurp(dir / "run2" / "metrics.csv") == metrics);

  const auto sup = run(cat({"train", "--mode", "Sup", "--epochs", "0", "--data", data, "-o", (dir / "sup").string()},
                           kSmallNet));
  CHECK(sup.code == kExitOk);
  CHECK(sup.err.find("warning: lambda") != std::string::npos);
  const auto quiet = run(cat({"train", "--mode", "Sup", "--lambda", "0", "--epochs", "0", "--data", data, "-o",
                              (dir / "sup").string()},
                             kSmallNet));
  CHECK(quiet.err.empty());

  const auto ev = run({"eval", "--data", data, "-o", run1});
  REQUIRE(ev.code == kExitOk);
  const auto csv = slurp(dir / "run1" / "eval" / "eval.csv");
  CHECK(csv.rfind("index,psnr_input,ssim_input,psnr_corrected,ssim_corrected\n", 0) == 0);
  CHECK(fs::exists(dir / "run1" / "eval" / "resolved.ini"));

  const auto ident = run({"eval", "--data", data, "-o", run1, "--pass-through", "--clean-input"});
  REQUIRE(ident.code == kExitOk);
  CHECK(slurp(dir / "run1" / "eval" / "eval.csv").find("0,inf,1,inf,1") != std::string::npos);

  const auto data64 = (dir / "data64").string();
  REQUIRE(run({"synth", "--pairs", "1", "--test-pairs", "1", "--views", "30", "-o", data64}).code == kExitOk);
  const auto wrong = run({"eval", "--data", data64, "--checkpoint", (dir / "run1" / "checkpoints" / "final").string(),
                          "-o", run1});
  CHECK(wrong.code == kExitRuntime);
  CHECK(wrong.err.find("geometry mismatch") != std::string::npos);
  CHECK(run({"eval", "--data", data, "--checkpoint", (dir / "void").string()}).code == kExitRuntime);
  fs::remove_all(dir);
}

TEST_CASE("diag passes by default and fails the negative control") {
  const auto dir = scratch("diag");
  const auto ok = run({"diag", "-o", dir.string()});
  CHECK(ok.code == kExitOk);
  CHECK(ok.out.find("weights_symmetric") != std::string::npos);
  CHECK(ok.out.find("tolerance") != std::string::npos);
  CHECK(fs::exists(dir / "diag" / "report.txt"));
  const auto bad = run({"diag", "--inject-asymmetry", "-o", dir.string()});
  CHECK(bad.code == kExitRuntime);
  CHECK(bad.out.find("FAIL weights_symmetric") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("recover writes the image and is deterministic") {
  const auto dir = scratch("recover");
  const std::vector<std::string> args{"recover", "--set", "synth.image_size=32", "--max-iterations", "4",
                                      "--fraction", "0.2", "-o"};
  const auto a = run(cat(args, {(dir / "a").string()}));
  const auto b = run(cat(args, {(dir / "b").string()}));
  REQUIRE(a.code == kExitOk);
  REQUIRE(b.code == kExitOk);
  CHECK(slurp(dir / "a" / "recover" / "recovered.f32") == slurp(dir / "b" / "recover" / "recovered.f32"));
  CHECK(a.out.find("gain") != std::string::npos);

  // User-supplied image and an empty mask.
  const auto img = dir / "a" / "recover" / "recovered.f32";
  Image zeros = Image::Zero(32, 32);
  save_image(dir / "mask.f32", zeros);
  const auto empty = run({"recover", "--image", img.string(), "--mask", (dir / "mask.f32").string(), "-o",
                          (dir / "c").string()});
  CHECK(empty.code == kExitRuntime);
  save_image(dir / "mask.f32", Image::Ones(32, 32));
  const auto full = run({"recover", "--image", img.string(), "--mask", (dir / "mask.f32").string(), "--truth",
                         img.string(), "-o", (dir / "c").string()});
  CHECK(full.code == kExitOk);
  CHECK(load_image(dir / "c" / "recover" / "recovered.f32") == load_image(img));
  fs::remove_all(dir);
}
