#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace ldmdn {

// splitmix64: tiny, portable and bit-reproducible across standard libraries,
// which std::*_distribution is not.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Uniform in [0, 1).
inline double uniform01(std::uint64_t& state) {
  return static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
}

inline double uniform(std::uint64_t& state, double lo, double hi) { return lo + (hi - lo) * uniform01(state); }

/// Standard normal via Box-Muller.
inline double normal01(std::uint64_t& state) {
  double u1 = uniform01(state);
  while (u1 <= 0.0) u1 = uniform01(state);
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform integer in [0, n).
inline std::uint64_t uniform_index(std::uint64_t& state, std::uint64_t n) {
  return n == 0 ? 0 : splitmix64(state) % n;
}

template <typename V>
void shuffle(std::vector<V>& items, std::uint64_t& state) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(state, i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Decorrelated sub-seed for stream `index` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (index + 1));
  return splitmix64(s);
}

}  // namespace ldmdn
