#include "ldmdn/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ldmdn/rng.hpp"
#include "ldmdn/tensor_io.hpp"

namespace ldmdn {

void DatasetConfig::validate() const {
  if (image_size < 8) throw std::invalid_argument("image_size must be >= 8");
  if (n_views < 1) throw std::invalid_argument("n_views must be >= 1");
  if (!(severity >= 0.0)) throw std::invalid_argument("severity must be >= 0");
  if (!(noise >= 0.0)) throw std::invalid_argument("noise must be >= 0");
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("ratio must lie in (0, 1)");
}

namespace {

Image round_to_float(const Image& img) { return img.cast<float>().cast<double>(); }

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string file_stem(const char* kind, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03zu", kind, index);
  return buf;
}

}  // namespace

CtPair synthesize_pair(const DatasetConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  PhantomConfig pc = cfg.phantom;
  pc.size = cfg.image_size;
  const auto phantom = random_phantom(pc, seed);
  const auto geom = cfg.scan();
  const auto sino = radon_forward(phantom, geom);
  CorruptionConfig cc;
  cc.severity = cfg.severity;
  cc.noise = cfg.noise;
  cc.seed = derive_seed(seed, 1);
  const auto corrupted = corrupt_metal(sino, cc);

  CtPair pair;
  pair.seed = seed;
  pair.metal_pixels = static_cast<int>(phantom.metal_mask.count());
  pair.clean = round_to_float(clip01(fbp(sino, geom, cfg.image_size)));
  pair.artifact = round_to_float(clip01(fbp(corrupted, geom, cfg.image_size)));
  pair.li = round_to_float(clip01(fbp(li_correct(corrupted, &pair.li_fallback_views), geom, cfg.image_size)));
  return pair;
}

Dataset synthesize_dataset(int n_pairs, int n_test, const DatasetConfig& cfg) {
  cfg.validate();
  if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
  if (n_test < 0) throw std::invalid_argument("n_test must be >= 0");
  Dataset ds;
  ds.cfg = cfg;
  for (int i = 0; i < n_pairs; ++i) {
    ds.train.push_back(synthesize_pair(cfg, derive_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(i))));
  }
  for (int i = 0; i < n_test; ++i) {
    ds.test.push_back(synthesize_pair(cfg, derive_seed(cfg.seed, 500000 + static_cast<std::uint64_t>(i))));
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n_pairs));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t rng = derive_seed(cfg.seed, 77);
  shuffle(order, rng);
  auto n_art = static_cast<std::size_t>(std::llround(cfg.ratio * n_pairs));
  if (n_pairs >= 2) n_art = std::clamp<std::size_t>(n_art, 1, static_cast<std::size_t>(n_pairs - 1));
  ds.pool_artifact.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_art));
  ds.pool_clean.assign(order.begin() + static_cast<std::ptrdiff_t>(n_art), order.end());
  std::sort(ds.pool_artifact.begin(), ds.pool_artifact.end());
  std::sort(ds.pool_clean.begin(), ds.pool_clean.end());
  return ds;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < img.rows(); ++i)
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      const double v = std::clamp(img(i, j), 0.0, 1.0);
      os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
}

Tensor to_network(const Image& img) {
  std::vector<float> values(static_cast<std::size_t>(img.size()));
  for (Eigen::Index i = 0; i < img.rows(); ++i)
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      values[static_cast<std::size_t>(i * img.cols() + j)] = static_cast<float>(2.0 * img(i, j) - 1.0);
    }
  return Tensor::from_data({1, 1, img.rows(), img.cols()}, std::move(values));
}

Image from_network(const Tensor& t, std::int64_t index) {
  if (t.rank() != 4 || t.dim(1) != 1 || index < 0 || index >= t.dim(0)) {
    throw std::invalid_argument("from_network: expected [N,1,H,W] and a valid index, got " + shape_str(t.shape()));
  }
  const auto h = t.dim(2), w = t.dim(3);
  Image img(h, w);
  for (std::int64_t i = 0; i < h; ++i)
    for (std::int64_t j = 0; j < w; ++j) {
      img(i, j) = 0.5 * (static_cast<double>(t[static_cast<std::size_t>((index * h + i) * w + j)]) + 1.0);
    }
  return img;
}

void save_image(const std::filesystem::path& path, const Image& img) {
  std::vector<float> values(static_cast<std::size_t>(img.size()));
  for (Eigen::Index i = 0; i < img.rows(); ++i)
    for (Eigen::Index j = 0; j < img.cols(); ++j) {
      values[static_cast<std::size_t>(i * img.cols() + j)] = static_cast<float>(img(i, j));
    }
  save_tensor(path, Tensor::from_data({1, 1, img.rows(), img.cols()}, std::move(values)));
}

Image load_image(const std::filesystem::path& path) {
  const auto t = load_tensor(path);
  if (t.rank() == 2) {
    Image img(t.dim(0), t.dim(1));
    for (std::int64_t i = 0; i < t.dim(0); ++i)
      for (std::int64_t j = 0; j < t.dim(1); ++j) img(i, j) = t[static_cast<std::size_t>(i * t.dim(1) + j)];
    return img;
  }
  if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != 1) {
    throw std::runtime_error(path.string() + ": expected a [1,1,H,W] or [H,W] image, got " + shape_str(t.shape()));
  }
  Image img(t.dim(2), t.dim(3));
  for (std::int64_t i = 0; i < t.dim(2); ++i)
    for (std::int64_t j = 0; j < t.dim(3); ++j) img(i, j) = t[static_cast<std::size_t>(i * t.dim(3) + j)];
  return img;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const auto& c = ds.cfg;
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "test");
  auto dump = [&](const char* split, const std::vector<CtPair>& pairs) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto base = dir / split;
      for (auto [kind, img] : {std::pair{"artifact", &pairs[i].artifact}, std::pair{"clean", &pairs[i].clean},
                               std::pair{"li", &pairs[i].li}}) {
        save_image(base / (file_stem(kind, i) + ".f32"), *img);
        write_pgm(base / (file_stem(kind, i) + ".pgm"), *img);
      }
    }
  };
  dump("train", ds.train);
  dump("test", ds.test);

  std::ofstream m(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
  if (!m) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
  m << "format ldmdn-dataset 1\n"
    << "image_size " << c.image_size << '\n'
    << "n_views " << c.n_views << '\n'
    << "n_detectors " << c.scan().n_detectors << '\n'
    << "severity " << fmt_double(c.severity) << '\n'
    << "noise " << fmt_double(c.noise) << '\n'
    << "ratio " << fmt_double(c.ratio) << '\n'
    << "seed " << c.seed << '\n'
    << "train_pairs " << ds.train.size() << '\n'
    << "test_pairs " << ds.test.size() << '\n';
  m << "pool_artifact";
  for (auto i : ds.pool_artifact) m << ' ' << i;
  m << "\npool_clean";
  for (auto i : ds.pool_clean) m << ' ' << i;
  m << '\n';
  auto list = [&](const char* split, const std::vector<CtPair>& pairs) {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      m << "pair " << split << ' ' << i << " seed " << pairs[i].seed << " metal_pixels " << pairs[i].metal_pixels
        << " li_fallback_views " << pairs[i].li_fallback_views << '\n';
    }
  };
  list("train", ds.train);
  list("test", ds.test);
  if (!m) throw std::runtime_error("failed writing the dataset manifest");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset manifest not found: " + path.string());
  Dataset ds;
  std::size_t n_train = 0, n_test = 0;
  std::string line;
  struct PairMeta {
    std::uint64_t seed = 0;
    int metal = 0, fallback = 0;
  };
  std::vector<PairMeta> train_meta, test_meta;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto& c = ds.cfg;
    if (key == "format") {
      std::string name;
      int version = 0;
      ls >> name >> version;
      if (name != "ldmdn-dataset" || version != 1) throw std::runtime_error(path.string() + ": unsupported format");
    } else if (key == "image_size") {
      ls >> c.image_size;
    } else if (key == "n_views") {
      ls >> c.n_views;
    } else if (key == "n_detectors") {
      int nd = 0;
      ls >> nd;
    } else if (key == "severity") {
      ls >> c.severity;
    } else if (key == "noise") {
      ls >> c.noise;
    } else if (key == "ratio") {
      ls >> c.ratio;
    } else if (key == "seed") {
      ls >> c.seed;
    } else if (key == "train_pairs") {
      ls >> n_train;
    } else if (key == "test_pairs") {
      ls >> n_test;
    } else if (key == "pool_artifact" || key == "pool_clean") {
      auto& pool = key == "pool_artifact" ? ds.pool_artifact : ds.pool_clean;
      std::size_t idx;
      while (ls >> idx) pool.push_back(idx);
    } else if (key == "pair") {
      std::string split, k1, k2, k3;
      std::size_t idx = 0;
      PairMeta pm;
      ls >> split >> idx >> k1 >> pm.seed >> k2 >> pm.metal >> k3 >> pm.fallback;
      auto& meta = split == "train" ? train_meta : test_meta;
      if (meta.size() <= idx) meta.resize(idx + 1);
      meta[idx] = pm;
    } else {
      throw std::runtime_error(path.string() + ": unknown manifest key '" + key + "'");
    }
  }
  auto load = [&](const char* split, std::size_t n, const std::vector<PairMeta>& meta) {
    std::vector<CtPair> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto base = dir / split;
      out[i].artifact = load_image(base / (file_stem("artifact", i) + ".f32"));
      out[i].clean = load_image(base / (file_stem("clean", i) + ".f32"));
      out[i].li = load_image(base / (file_stem("li", i) + ".f32"));
      if (i < meta.size()) {
        out[i].seed = meta[i].seed;
        out[i].metal_pixels = meta[i].metal;
        out[i].li_fallback_views = meta[i].fallback;
      }
    }
    return out;
  };
  ds.train = load("train", n_train, train_meta);
  ds.test = load("test", n_test, test_meta);
  for (auto i : ds.pool_artifact)
    if (i >= ds.train.size()) throw std::runtime_error(path.string() + ": pool index out of range");
  for (auto i : ds.pool_clean)
    if (i >= ds.train.size()) throw std::runtime_error(path.string() + ": pool index out of range");
  return ds;
}

TrainingPools make_training_pools(const Dataset& ds) {
  TrainingPools p;
  for (const auto& pair : ds.train) {
    p.paired_x.push_back(to_network(pair.artifact));
    p.paired_gt.push_back(to_network(pair.clean));
  }
  for (auto i : ds.pool_artifact) p.unpaired_artifact.push_back(to_network(ds.train[i].artifact));
  for (auto i : ds.pool_clean) p.unpaired_clean.push_back(to_network(ds.train[i].clean));
  return p;
}

EvalSummary evaluate(const DisentangleNet* net, const std::vector<CtPair>& pairs, bool clean_input, double peak) {
  EvalSummary s;
  NoGradGuard no_grad;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& input = clean_input ? pairs[i].clean : pairs[i].artifact;
    Image out = input;
    if (net) out = clip01(from_network(net->correct(to_network(input))));
    EvalRow r;
    r.index = i;
    r.psnr_in = psnr(input, pairs[i].clean, peak);
    r.ssim_in = ssim(input, pairs[i].clean, peak);
    r.psnr_out = psnr(out, pairs[i].clean, peak);
    r.ssim_out = ssim(out, pairs[i].clean, peak);
    s.rows.push_back(r);
  }
  if (!s.rows.empty()) {
    const double n = static_cast<double>(s.rows.size());
    for (const auto& r : s.rows) {
      s.mean_psnr_in += r.psnr_in / n;
      s.mean_ssim_in += r.ssim_in / n;
      s.mean_psnr_out += r.psnr_out / n;
      s.mean_ssim_out += r.ssim_out / n;
    }
  }
  return s;
}

void write_eval_csv(std::ostream& os, const EvalSummary& s) {
  auto num = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  os << "index,psnr_input,ssim_input,psnr_corrected,ssim_corrected\n";
  for (const auto& r : s.rows) {
    os << r.index << ',' << num(r.psnr_in) << ',' << num(r.ssim_in) << ',' << num(r.psnr_out) << ','
       << num(r.ssim_out) << '\n';
  }
  os << "mean," << num(s.mean_psnr_in) << ',' << num(s.mean_ssim_in) << ',' << num(s.mean_psnr_out) << ','
     << num(s.mean_ssim_out) << '\n';
}

}  // namespace ldmdn
