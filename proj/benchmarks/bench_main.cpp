#include <benchmark/benchmark.h>

#include <vector>

#include "ldmdn/ct.hpp"
#include "ldmdn/manifold.hpp"
#include "ldmdn/network.hpp"
#include "ldmdn/ops.hpp"
#include "ldmdn/rng.hpp"
#include "ldmdn/trainer.hpp"

using namespace ldmdn;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, bool grad = false) {
  std::uint64_t rng = seed;
  std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<float>(uniform(rng, -1.0, 1.0));
  return Tensor::from_data(std::move(shape), std::move(v), grad);
}

Eigen::MatrixXd random_points(Eigen::Index m, Eigen::Index d, std::uint64_t seed) {
  std::uint64_t rng = seed;
  Eigen::MatrixXd p(m, d);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < d; ++j) p(i, j) = uniform(rng, -1.0, 1.0);
  return p;
}

void BM_Conv2dForward(benchmark::State& state) {
  const auto c = state.range(0);
  const auto x = random_tensor({1, c, 64, 64}, 1);
  const auto k = random_tensor({c, c, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, k, 1, 1));
}
BENCHMARK(BM_Conv2dForward)->Arg(8)->Arg(32);

void BM_Conv2dBackward(benchmark::State& state) {
  const auto c = state.range(0);
  const auto x = random_tensor({1, c, 64, 64}, 1, true);
  auto k = random_tensor({c, c, 3, 3}, 2, true);
  for (auto _ : state) {
    k.zero_grad();
    backward(sum(conv2d(x, k, 1, 1)));
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(8)->Arg(32);

void BM_NetworkForward(benchmark::State& state) {
  DisentangleNet net({GeometryConfig{}, NetworkVariant::UnpairedLDM, 8, 32, 0});
  const auto x = random_tensor({1, 1, 64, 64}, 3), y = random_tensor({1, 1, 64, 64}, 4);
  NoGradGuard ng;
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, y));
}
BENCHMARK(BM_NetworkForward)->Unit(benchmark::kMillisecond);

void BM_GaussianWeights(benchmark::State& state) {
  const auto p = random_points(state.range(0), 128, 5);
  KernelConfig kc;
  kc.t = median_bandwidth(p);
  for (auto _ : state) benchmark::DoNotOptimize(gaussian_weights(p, kc));
}
BENCHMARK(BM_GaussianWeights)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_SolveCoordinates(benchmark::State& state) {
  const auto m = state.range(0);
  const auto p = random_points(m, 128, 6);
  const auto v = random_points(m, 128, 7);
  KernelConfig kc;
  kc.t = median_bandwidth(p);
  const auto ops = gaussian_weights(p, kc);
  for (auto _ : state) benchmark::DoNotOptimize(solve_coordinates(ops, v, kc));
}
BENCHMARK(BM_SolveCoordinates)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_TrainingStep(benchmark::State& state) {
  TrainConfig cfg;
  cfg.mode = static_cast<TrainMode>(state.range(0));
  Trainer t(GeometryConfig{}, cfg);
  Batch b;
  if (mode_uses_paired(cfg.mode)) b.paired = PairedSample{random_tensor({1, 1, 64, 64}, 8), random_tensor({1, 1, 64, 64}, 9)};
  if (mode_uses_unpaired(cfg.mode)) {
    b.unpaired = UnpairedSample{random_tensor({1, 1, 64, 64}, 10), random_tensor({1, 1, 64, 64}, 11)};
  }
  for (auto _ : state) benchmark::DoNotOptimize(t.training_step(b));
  state.SetLabel(to_string(cfg.mode));
}
BENCHMARK(BM_TrainingStep)
    ->Arg(static_cast<int>(TrainMode::Sup))
    ->Arg(static_cast<int>(TrainMode::LdmDnSup))
    ->Unit(benchmark::kMillisecond);

void BM_RadonForward(benchmark::State& state) {
  const auto geom = ScanGeometry::for_image(64, 180);
  const auto img = smooth_phantom(64, 1);
  for (auto _ : state) benchmark::DoNotOptimize(radon_forward(img, geom));
}
BENCHMARK(BM_RadonForward)->Unit(benchmark::kMillisecond);

void BM_Fbp(benchmark::State& state) {
  const auto geom = ScanGeometry::for_image(64, 180);
  const auto sino = radon_forward(smooth_phantom(64, 1), geom);
  for (auto _ : state) benchmark::DoNotOptimize(fbp(sino, geom, 64));
}
BENCHMARK(BM_Fbp)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
