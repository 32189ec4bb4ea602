#include <stdexcept>
#include <string>

#include "ldmdn/manifold.hpp"

namespace ldmdn {

namespace {

template <typename T>
void check_source(const PatchSource<T>& src, const GeometryConfig& g) {
  const auto& im = src.images;
  const auto& cd = src.codes;
  if (!im.defined() || im.rank() != 4 || im.dim(1) != 1 || im.dim(2) != g.image_h || im.dim(3) != g.image_w) {
    throw std::invalid_argument("patch source image must be [N,1," + std::to_string(g.image_h) + "," +
                                std::to_string(g.image_w) + "], got " +
                                (im.defined() ? shape_str(im.shape()) : std::string("<undefined>")));
  }
  const Shape want{im.dim(0), g.code_channels(), g.code_h(), g.code_w()};
  if (!cd.defined() || cd.shape() != want) {
    throw std::invalid_argument("patch source code must be " + shape_str(want) + ", got " +
                                (cd.defined() ? shape_str(cd.shape()) : std::string("<undefined>")));
  }
}

template <typename T>
std::vector<const PatchSource<T>*> ordered(std::span<const PatchSource<T>> sources) {
  std::vector<const PatchSource<T>*> out;
  for (const auto& s : sources)
    if (s.branch == Branch::Corrected) out.push_back(&s);
  for (const auto& s : sources)
    if (s.branch == Branch::Free) out.push_back(&s);
  return out;
}

// Visits every (row, column, source element) triple of the patch layout.
template <typename T, typename Fn>
void for_each_patch_entry(const std::vector<const PatchSource<T>*>& sources, const GeometryConfig& g, Fn&& fn) {
  const int s = g.s;
  const int ss = s * s;
  const int h = g.code_h(), w = g.code_w();
  std::int64_t row = 0;
  for (std::size_t e = 0; e < sources.size(); ++e) {
    const auto batch = sources[e]->images.dim(0);
    for (std::int64_t n = 0; n < batch; ++n) {
      for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j, ++row) {
          for (int py = 0; py < s; ++py)
            for (int px = 0; px < s; ++px) {
              const std::int64_t idx = (n * g.image_h + i * s + py) * g.image_w + j * s + px;
              fn(row, py * s + px, e, false, idx);
            }
          for (int c = 0; c < ss; ++c) {
            const std::int64_t idx = ((n * ss + c) * h + i) * w + j;
            fn(row, ss + c, e, true, idx);
          }
        }
      }
    }
  }
}

template <typename T>
std::int64_t row_count(const std::vector<const PatchSource<T>*>& sources, const GeometryConfig& g) {
  std::int64_t m = 0;
  for (auto* s : sources) m += s->images.dim(0) * g.code_h() * g.code_w();
  return m;
}

}  // namespace

template <typename T>
PatchSet build_patch_set(std::span<const PatchSource<T>> sources, const GeometryConfig& geom) {
  geom.validate();
  for (const auto& s : sources) check_source(s, geom);
  const auto src = ordered(sources);
  const auto m = row_count(src, geom);
  PatchSet out;
  out.points.resize(m, geom.patch_dim());
  out.provenance.reserve(static_cast<std::size_t>(m));
  for (auto* s : src) {
    const auto n = s->images.dim(0) * geom.code_h() * geom.code_w();
    out.provenance.insert(out.provenance.end(), static_cast<std::size_t>(n), s->branch);
  }
  for_each_patch_entry(src, geom, [&](std::int64_t r, int c, std::size_t e, bool code, std::int64_t idx) {
    const auto& t = code ? src[e]->codes : src[e]->images;
    out.points(r, c) = static_cast<double>(t[static_cast<std::size_t>(idx)]);
  });
  return out;
}

template <typename T>
BasicTensor<T> patch_tensor(std::span<const PatchSource<T>> sources, const GeometryConfig& geom) {
  geom.validate();
  for (const auto& s : sources) check_source(s, geom);
  const auto src = ordered(sources);
  const auto m = row_count(src, geom);
  const auto d = static_cast<std::int64_t>(geom.patch_dim());
  std::vector<T> values(static_cast<std::size_t>(m * d));
  for_each_patch_entry(src, geom, [&](std::int64_t r, int c, std::size_t e, bool code, std::int64_t idx) {
    const auto& t = code ? src[e]->codes : src[e]->images;
    values[static_cast<std::size_t>(r * d + c)] = t[static_cast<std::size_t>(idx)];
  });

  std::vector<std::shared_ptr<TensorNode<T>>> parents;
  for (auto* s : src) {
    parents.push_back(s->images.node());
    parents.push_back(s->codes.node());
  }
  // Keep the sources' handles alive and ordered for the backward scatter.
  std::vector<PatchSource<T>> kept;
  for (auto* s : src) kept.push_back(*s);
  return detail::make_result<T>({m, d}, std::move(values), parents,
                                [kept, geom, d](TensorNode<T>& self) {
                                  std::vector<const PatchSource<T>*> ptrs;
                                  for (const auto& k : kept) ptrs.push_back(&k);
                                  for_each_patch_entry(ptrs, geom, [&](std::int64_t r, int c, std::size_t e, bool code,
                                                                       std::int64_t idx) {
                                    auto& node = code ? *kept[e].codes.node() : *kept[e].images.node();
                                    if (node.requires_grad) {
                                      node.grad[static_cast<std::size_t>(idx)] +=
                                          self.grad[static_cast<std::size_t>(r * d + c)];
                                    }
                                  });
                                });
}

Eigen::MatrixXd image_patches(const Eigen::MatrixXd& image, int patch, int step) {
  if (patch < 1 || step < 1) throw std::invalid_argument("image_patches: patch and step must be >= 1");
  const auto h = image.rows(), w = image.cols();
  if (h % step != 0 || w % step != 0) {
    throw std::invalid_argument("image_patches: image extents must be divisible by the step");
  }
  const auto rows = h / step, cols = w / step;
  Eigen::MatrixXd out(rows * cols, patch * patch);
  for (Eigen::Index a = 0; a < rows; ++a)
    for (Eigen::Index b = 0; b < cols; ++b)
      for (int py = 0; py < patch; ++py)
        for (int px = 0; px < patch; ++px) {
          out(a * cols + b, py * patch + px) = image((a * step + py) % h, (b * step + px) % w);
        }
  return out;
}

template PatchSet build_patch_set(std::span<const PatchSource<float>>, const GeometryConfig&);
template PatchSet build_patch_set(std::span<const PatchSource<double>>, const GeometryConfig&);
template BasicTensor<float> patch_tensor(std::span<const PatchSource<float>>, const GeometryConfig&);
template BasicTensor<double> patch_tensor(std::span<const PatchSource<double>>, const GeometryConfig&);

}  // namespace ldmdn
