#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ldmdn/ct.hpp"
#include "ldmdn/rng.hpp"

namespace ldmdn {

namespace {

struct Ellipse {
  double cx, cy, a, b, angle, value;
  bool additive;

  bool contains(double x, double y) const {
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double dx = x - cx, dy = y - cy;
    const double u = (dx * ca + dy * sa) / a;
    const double v = (-dx * sa + dy * ca) / b;
    return u * u + v * v <= 1.0;
  }
};

struct Bar {
  double cx, cy, half_len, half_width, angle, value;

  bool contains(double x, double y) const {
    const double ca = std::cos(angle), sa = std::sin(angle);
    const double dx = x - cx, dy = y - cy;
    return std::abs(dx * ca + dy * sa) <= half_len && std::abs(-dx * sa + dy * ca) <= half_width;
  }
};

struct Blob {
  double cx, cy, r;
};

// Rasterises fn(x, y) with ss x ss sub-samples per pixel; coordinates are
// relative to the image centre in pixel units.
template <typename Fn>
Image rasterise(int n, int ss, Fn&& fn) {
  Image img(n, n);
  const double c = 0.5 * (n - 1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int a = 0; a < ss; ++a)
        for (int b = 0; b < ss; ++b) {
          const double y = i - c + (a + 0.5) / ss - 0.5;
          const double x = j - c + (b + 0.5) / ss - 0.5;
          acc += fn(x, y);
        }
      img(i, j) = acc / (ss * ss);
    }
  return img;
}

}  // namespace

PhantomImage random_phantom(const PhantomConfig& cfg, std::uint64_t seed) {
  if (cfg.size < 8) throw std::invalid_argument("phantom size must be >= 8");
  if (cfg.supersample < 1) throw std::invalid_argument("phantom supersample must be >= 1");
  if (cfg.min_metal < 0 || cfg.max_metal < cfg.min_metal) throw std::invalid_argument("phantom metal count range");
  if (cfg.min_ellipses < 0 || cfg.max_ellipses < cfg.min_ellipses) {
    throw std::invalid_argument("phantom ellipse count range");
  }
  if (!(cfg.metal_value > cfg.metal_threshold)) {
    throw std::invalid_argument("phantom metal_value must exceed metal_threshold");
  }
  std::uint64_t rng = seed ^ 0x7068616e746f6d21ULL;
  const double n = cfg.size;
  const double pi = std::numbers::pi;

  Ellipse body{uniform(rng, -0.03, 0.03) * n, uniform(rng, -0.03, 0.03) * n, uniform(rng, 0.38, 0.45) * n,
               uniform(rng, 0.30, 0.40) * n, uniform(rng, -0.3, 0.3), cfg.body_value, false};

  // Random point strictly inside the body, scaled towards its centre.
  auto inside_body = [&](double shrink) {
    const double r = std::sqrt(uniform01(rng)) * shrink;
    const double phi = uniform(rng, 0.0, 2.0 * pi);
    const double u = r * std::cos(phi) * body.a, v = r * std::sin(phi) * body.b;
    const double ca = std::cos(body.angle), sa = std::sin(body.angle);
    return std::pair{body.cx + u * ca - v * sa, body.cy + u * sa + v * ca};
  };

  std::vector<Ellipse> organs;
  const int n_ell = cfg.min_ellipses + static_cast<int>(uniform_index(rng, cfg.max_ellipses - cfg.min_ellipses + 1));
  for (int e = 0; e < n_ell; ++e) {
    const auto [x, y] = inside_body(0.7);
    Ellipse el{x, y, uniform(rng, 0.05, 0.2) * n, uniform(rng, 0.04, 0.14) * n, uniform(rng, 0.0, pi),
               uniform(rng, 0.05, 0.8), uniform01(rng) < 0.3};
    if (el.additive) el.value = uniform(rng, -0.1, 0.15);
    organs.push_back(el);
  }
  std::vector<Bar> bars;
  const int n_bars = static_cast<int>(uniform_index(rng, cfg.max_bars + 1));
  for (int b = 0; b < n_bars; ++b) {
    const auto [x, y] = inside_body(0.6);
    bars.push_back({x, y, uniform(rng, 0.08, 0.22) * n, uniform(rng, 0.8, 1.6), uniform(rng, 0.0, pi),
                    uniform(rng, 0.6, 0.9)});
  }
  std::vector<Blob> blobs;
  const int n_metal = cfg.min_metal + static_cast<int>(uniform_index(rng, cfg.max_metal - cfg.min_metal + 1));
  for (int b = 0; b < n_metal; ++b) {
    const auto [x, y] = inside_body(0.75);
    blobs.push_back({x, y, uniform(rng, cfg.metal_radius_min, cfg.metal_radius_max)});
  }

  PhantomImage out;
  out.pixels = rasterise(cfg.size, cfg.supersample, [&](double x, double y) {
    if (!body.contains(x, y)) return 0.0;
    double v = body.value;
    for (const auto& el : organs) {
      if (!el.contains(x, y)) continue;
      v = el.additive ? v + el.value : el.value;
    }
    for (const auto& bar : bars)
      if (bar.contains(x, y)) v = bar.value;
    return std::clamp(v, 0.0, 1.0);
  });

  // Metal is painted at pixel resolution so that the mask is exact.
  out.metal_mask = Mask::Constant(cfg.size, cfg.size, false);
  const double c = 0.5 * (cfg.size - 1);
  for (int i = 0; i < cfg.size; ++i)
    for (int j = 0; j < cfg.size; ++j) {
      const double x = j - c, y = i - c;
      for (const auto& bl : blobs) {
        if ((x - bl.cx) * (x - bl.cx) + (y - bl.cy) * (y - bl.cy) <= bl.r * bl.r) {
          out.metal_mask(i, j) = true;
          out.pixels(i, j) = cfg.metal_value;
        }
      }
    }
  return out;
}

Image disk_phantom(int n, double radius, double value, int supersample) {
  if (n < 1 || supersample < 1) throw std::invalid_argument("disk_phantom: bad size");
  return rasterise(n, supersample, [&](double x, double y) { return x * x + y * y <= radius * radius ? value : 0.0; });
}

Image smooth_phantom(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("smooth_phantom: size must be >= 2");
  std::uint64_t rng = seed ^ 0x736d6f6f7468ULL;
  const double pi = std::numbers::pi;
  const double fx = uniform(rng, 0.5, 1.5), fy = uniform(rng, 0.5, 1.5);
  const double px = uniform(rng, 0.0, 2 * pi), py = uniform(rng, 0.0, 2 * pi);
  struct Bump {
    double x, y, sigma, amp;
  };
  std::vector<Bump> bumps;
  const int nb = 3 + static_cast<int>(uniform_index(rng, 3));
  for (int b = 0; b < nb; ++b) {
    bumps.push_back({uniform(rng, 0.15, 0.85) * n, uniform(rng, 0.15, 0.85) * n, uniform(rng, 0.08, 0.2) * n,
                     uniform(rng, -1.0, 1.0)});
  }
  Image img(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.3 * std::sin(2 * pi * fx * j / n + px) + 0.3 * std::sin(2 * pi * fy * i / n + py);
      for (const auto& b : bumps) {
        const double r2 = (j - b.x) * (j - b.x) + (i - b.y) * (i - b.y);
        v += b.amp * std::exp(-r2 / (2 * b.sigma * b.sigma));
      }
      img(i, j) = v;
    }
  const double lo = img.minCoeff(), hi = img.maxCoeff();
  if (hi > lo) img = ((img.array() - lo) / (hi - lo) * 0.9 + 0.05).matrix();
  return img;
}

}  // namespace ldmdn
