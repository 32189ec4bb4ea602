#include "ldmdn/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ldmdn/tensor_io.hpp"

namespace ldmdn {

void save_checkpoint(const DisentangleNet& net, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& cfg = net.config();
  std::ofstream manifest(dir / "manifest.txt", std::ios::binary | std::ios::trunc);
  if (!manifest) throw std::runtime_error("cannot write " + (dir / "manifest.txt").string());
  manifest << "variant " << to_string(cfg.variant) << '\n'
           << "image_h " << cfg.geometry.image_h << '\n'
           << "image_w " << cfg.geometry.image_w << '\n'
           << "s " << cfg.geometry.s << '\n'
           << "base_channels " << cfg.base_channels << '\n'
           << "max_channels " << cfg.max_channels << '\n'
           << "seed " << cfg.seed << '\n';
  for (const auto& e : net.parameters().entries()) {
    manifest << "param " << e.name << ' ' << shape_str(e.value.shape()) << '\n';
    save_tensor(dir / (e.name + ".f32"), e.value);
  }
  if (!manifest) throw std::runtime_error("failed writing " + (dir / "manifest.txt").string());
}

std::unique_ptr<DisentangleNet> load_checkpoint(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint manifest not found: " + path.string());
  NetworkConfig cfg;
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (key == "variant") {
      std::string v;
      ls >> v;
      cfg.variant = parse_network_variant(v);
    } else if (key == "image_h") {
      ls >> cfg.geometry.image_h;
    } else if (key == "image_w") {
      ls >> cfg.geometry.image_w;
    } else if (key == "s") {
      ls >> cfg.geometry.s;
    } else if (key == "base_channels") {
      ls >> cfg.base_channels;
    } else if (key == "max_channels") {
      ls >> cfg.max_channels;
    } else if (key == "seed") {
      ls >> cfg.seed;
    } else if (key == "param") {
      std::string name;
      ls >> name;
      names.push_back(name);
    } else {
      throw std::runtime_error(path.string() + ": unknown manifest key '" + key + "'");
    }
  }
  auto net = std::make_unique<DisentangleNet>(cfg);
  auto& entries = net->parameters().entries();
  if (names.size() != entries.size()) {
    throw std::runtime_error(path.string() + ": lists " + std::to_string(names.size()) + " parameters, variant " +
                             to_string(cfg.variant) + " has " + std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (names[i] != entries[i].name) {
      throw std::runtime_error(path.string() + ": parameter " + std::to_string(i) + " is '" + names[i] +
                               "', expected '" + entries[i].name + "'");
    }
    const auto t = load_tensor(dir / (names[i] + ".f32"));
    if (t.shape() != entries[i].value.shape()) {
      throw std::runtime_error("parameter '" + names[i] + "' has shape " + shape_str(t.shape()) + ", expected " +
                               shape_str(entries[i].value.shape()));
    }
    std::copy(t.data().begin(), t.data().end(), entries[i].value.data().begin());
  }
  return net;
}

}  // namespace ldmdn
