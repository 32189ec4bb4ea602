#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ldmdn/adam.hpp"
#include "ldmdn/ops.hpp"
#include "ldmdn/tensor_io.hpp"
#include "support.hpp"

using namespace ldmdn;
using ldmdn::test::random_tensor;

namespace {

std::vector<double> values(const TensorD& t) { return {t.data().begin(), t.data().end()}; }

double dot(const TensorD& a, const TensorD& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("conv2d matches the direct summation") {
  std::uint64_t rng = 11;
  struct Case {
    Shape x, k;
    int stride, pad;
  };
  for (const auto& c : {Case{{2, 3, 7, 6}, {4, 3, 3, 3}, 1, 1}, Case{{1, 2, 8, 8}, {3, 2, 4, 4}, 2, 1},
                        Case{{1, 1, 5, 9}, {2, 1, 1, 1}, 1, 0}, Case{{3, 2, 9, 7}, {1, 2, 3, 2}, 2, 0}}) {
    const auto x = random_tensor(c.x, rng);
    const auto k = random_tensor(c.k, rng);
    Shape expect_shape;
    const auto ref = test::naive_conv2d(values(x), c.x, values(k), c.k, c.stride, c.pad, &expect_shape);
    const auto y = conv2d(x, k, c.stride, c.pad);
    REQUIRE(y.shape() == expect_shape);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  std::uint64_t rng = 12;
  for (int stride : {1, 2}) {
    const Shape xs{2, 3, 8, 8};
    const auto x = random_tensor(xs, rng);
    const auto k = random_tensor({5, 3, 4, 4}, rng);
    const auto y = conv2d(x, k, stride, 1);
    const auto g = random_tensor(y.shape(), rng);
    const auto back = conv_transpose2d(g, k, stride, 1);
    REQUIRE(back.shape() == xs);
    CHECK(dot(y, g) == doctest::Approx(dot(x, back)).epsilon(1e-12));
  }
}

TEST_CASE("elementwise ops and reductions") {
  const auto a = TensorD::from_data({2, 2}, {1.0, -2.0, 3.0, -4.0});
  const auto b = TensorD::from_data({2, 2}, {0.5, 0.5, -1.0, 2.0});
  CHECK(sum(a).item() == -2.0);
  CHECK(mean(a).item() == -0.5);
  CHECK(l1_loss(a, b).item() == doctest::Approx((0.5 + 2.5 + 4.0 + 6.0) / 4.0));
  CHECK(mse_loss(a, b).item() == doctest::Approx((0.25 + 6.25 + 16.0 + 36.0) / 4.0));
  CHECK(frobenius_sq(a).item() == 30.0);
  const auto lr = leaky_relu(a);
  CHECK(lr[1] == doctest::Approx(-0.4));
  CHECK(lr[2] == 3.0);
  CHECK(tanh(a)[0] == doctest::Approx(std::tanh(1.0)));
  CHECK(mul(a, b)[3] == -8.0);
  CHECK(scale(a, 0.5)[2] == 1.5);
  const auto r = reshape(a, {4});
  CHECK(r.shape() == Shape{4});
  CHECK_THROWS(reshape(a, {3}));
  CHECK_THROWS(add(a, TensorD::zeros({4})));
}

TEST_CASE("concat and bias follow NCHW layout") {
  std::uint64_t rng = 5;
  const auto a = random_tensor({2, 1, 2, 2}, rng);
  const auto b = random_tensor({2, 3, 2, 2}, rng);
  const auto c = concat_channels(a, b);
  REQUIRE(c.shape() == Shape{2, 4, 2, 2});
  CHECK(c[0] == a[0]);
  CHECK(c[4] == b[0]);
  CHECK(c[16] == a[4]);
  const auto rows = concat_rows(a, a);
  CHECK(rows.dim(0) == 4);
  const auto bias = TensorD::from_data({3}, {1.0, 2.0, 3.0});
  const auto biased = add_bias(b, bias);
  CHECK(biased[5] == doctest::Approx(b[5] + 2.0));
}

TEST_CASE("gradients of every op match central differences") {
  std::uint64_t rng = 21;
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_tensor({2, 2, 6, 6}, rng, -1, 1, true);
    auto k1 = random_tensor({3, 2, 3, 3}, rng, -0.5, 0.5, true);
    auto b1 = random_tensor({3}, rng, -0.1, 0.1, true);
    auto k2 = random_tensor({3, 2, 4, 4}, rng, -0.5, 0.5, true);
    auto target = random_tensor({2, 2, 6, 6}, rng);
    auto w = random_tensor({2, 2, 6, 6}, rng);
    auto f = [&] {
      const auto h = leaky_relu(add_bias(conv2d(x, k1, 2, 1), b1));
      const auto up = tanh(conv_transpose2d(h, k2, 2, 1));
      const auto cat = concat_channels(up, x);
      const auto r = reshape(cat, {2, 4 * 36});
      return add(add(l1_loss(up, target), mse_loss(mul(up, w), target)), scale(mean(frobenius_sq(r)), 0.01));
    };
    const auto res = test::check_gradients({x, k1, b1, k2}, f, 1e-3, 0, 100 + trial);
    CHECK(res.checked > 0);
    CHECK(res.max_rel_error < 1e-5);
  }
}

TEST_CASE("leaf gradients accumulate, no-grad mode records nothing") {
  auto p = TensorD::from_data({3}, {1.0, 2.0, 3.0}, true);
  backward(sum(mul(p, p)));
  backward(sum(mul(p, p)));
  CHECK(p.grad()[1] == 8.0);
  p.zero_grad();
  CHECK(p.grad()[1] == 0.0);
  {
    NoGradGuard ng;
    CHECK_FALSE(grad_enabled());
    const auto q = mul(p, p);
    CHECK_FALSE(q.requires_grad());
  }
  CHECK(grad_enabled());
  auto d = p.detach();
  d.data()[0] = 42.0;
  CHECK(p[0] == 1.0);
  CHECK_FALSE(d.requires_grad());
}

TEST_CASE("shared subexpressions receive the sum of both paths") {
  auto p = TensorD::scalar(3.0, true);
  const auto q = mul(p, p);
  backward(add(q, scale(q, 2.0)));
  CHECK(p.grad()[0] == doctest::Approx(18.0));
}

TEST_CASE("kink probe separates the two sides of leaky relu") {
  auto x = TensorD::from_data({2}, {0.3, -0.2});
  KinkProbe a, b, c;
  {
    ScopedKinkProbe s(a);
    (void)leaky_relu(x);
  }
  {
    ScopedKinkProbe s(b);
    (void)leaky_relu(x);
  }
  x[1] = 0.2;
  {
    ScopedKinkProbe s(c);
    (void)leaky_relu(x);
  }
  CHECK(a == b);
  CHECK_FALSE(a == c);
  CHECK(active_kink_probe() == nullptr);
}

TEST_CASE("adam follows the bias-corrected closed form") {
  BasicParameterStore<double> store;
  auto p = store.add("p", TensorD::from_data({2}, {1.0, -1.0}));
  const AdamConfig cfg{0.1, 0.5, 0.999, 1e-8};
  const double g0 = 0.3, g1 = -2.0;
  double m0 = 0, v0 = 0, m1 = 0, v1 = 0, x0 = 1.0, x1 = -1.0;
  for (int t = 1; t <= 4; ++t) {
    store.zero_grad();
    p.grad()[0] = g0;
    p.grad()[1] = g1;
    store.adam_step(cfg);
    m0 = 0.5 * m0 + 0.5 * g0;
    v0 = 0.999 * v0 + 0.001 * g0 * g0;
    m1 = 0.5 * m1 + 0.5 * g1;
    v1 = 0.999 * v1 + 0.001 * g1 * g1;
    const double c1 = 1 - std::pow(0.5, t), c2 = 1 - std::pow(0.999, t);
    x0 -= 0.1 * (m0 / c1) / (std::sqrt(v0 / c2) + 1e-8);
    x1 -= 0.1 * (m1 / c1) / (std::sqrt(v1 / c2) + 1e-8);
    CHECK(p[0] == doctest::Approx(x0).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(x1).epsilon(1e-12));
  }
  CHECK(store.step_count() == 4);
}

TEST_CASE("adam rejects a NaN gradient without touching anything") {
  BasicParameterStore<float> store;
  auto a = store.add("a", Tensor::from_data({1}, {1.0f}));
  auto b = store.add("b", Tensor::from_data({1}, {2.0f}));
  store.zero_grad();
  a.grad()[0] = 1.0f;
  b.grad()[0] = std::nanf("");
  CHECK_THROWS_AS(store.adam_step({}), NonFiniteGradient);
  CHECK(a[0] == 1.0f);
  CHECK(store.step_count() == 0);
}

TEST_CASE("clone and assign_from carry values and moments") {
  BasicParameterStore<float> store;
  auto a = store.add("a", Tensor::from_data({2}, {1.0f, 2.0f}));
  store.zero_grad();
  a.grad()[0] = 0.5f;
  store.adam_step({});
  const auto snapshot = store.clone();
  store.adam_step({});
  CHECK(a[0] != snapshot.at("a")[0]);
  store.assign_from(snapshot);
  CHECK(a[0] == snapshot.at("a")[0]);
  CHECK(store.step_count() == 1);
  CHECK(store.entries()[0].m == snapshot.entries()[0].m);
}

TEST_CASE("tensor dumps round-trip bit-exactly") {
  std::uint64_t rng = 3;
  const auto t = random_tensor<float>({2, 3, 4}, rng);
  std::stringstream ss;
  write_tensor(ss, t);
  const auto back = read_tensor(ss);
  REQUIRE(back.shape() == t.shape());
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(back[i] == t[i]);
  std::stringstream bad("xx");
  CHECK_THROWS(read_tensor(bad));
}
