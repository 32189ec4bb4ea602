#include <cmath>

#include "doctest.h"
#include "ldmdn/recover.hpp"

using namespace ldmdn;

namespace {

RecoverConfig quick_config() {
  RecoverConfig c;
  c.max_iterations = 8;
  return c;
}

}  // namespace

TEST_CASE("recover config validation") {
  RecoverConfig c;
  CHECK_NOTHROW(c.validate());
  c.patch = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.mu_bar = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = {};
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("random masks hit the requested fraction") {
  const auto m = random_mask(64, 64, 0.1, 5);
  CHECK(m.count() == 410);
  CHECK((random_mask(64, 64, 0.1, 5) == m).all());
  CHECK_FALSE((random_mask(64, 64, 0.1, 6) == m).all());
  CHECK(random_mask(8, 8, 1.0, 0).all());
}

TEST_CASE("mean fill keeps known pixels and fills the rest with their mean") {
  Image img(2, 2);
  img << 1, 2, 3, 4;
  Mask known(2, 2);
  known << true, false, false, true;
  const auto f = mean_fill(img, known);
  CHECK(f(0, 0) == 1);
  CHECK(f(1, 1) == 4);
  CHECK(f(0, 1) == 2.5);
  CHECK(f(1, 0) == 2.5);
}

TEST_CASE("fully known images come back unchanged") {
  const auto img = smooth_phantom(32, 2);
  const Mask all = Mask::Constant(32, 32, true);
  const auto r = recover_image(img, all, quick_config());
  CHECK(r.image == img);
}

TEST_CASE("an empty known set is rejected") {
  const auto img = smooth_phantom(32, 2);
  CHECK_THROWS_AS(recover_image(img, Mask::Constant(32, 32, false), quick_config()), std::invalid_argument);
  CHECK_THROWS_AS(recover_image(img, Mask::Constant(16, 32, true), quick_config()), std::invalid_argument);
}

TEST_CASE("recovery keeps samples, improves on mean fill and is deterministic") {
  const auto truth = smooth_phantom(32, 7);
  const auto known = random_mask(32, 32, 0.2, 8);
  auto cfg = quick_config();
  const auto a = recover_image(truth, known, cfg);
  const auto b = recover_image(truth, known, cfg);
  CHECK(a.image == b.image);
  CHECK(a.iterations <= cfg.max_iterations);
  CHECK(a.changes.size() == static_cast<std::size_t>(a.iterations));
  for (Eigen::Index i = 0; i < truth.size(); ++i)
    if (known(i)) REQUIRE(a.image(i) == truth(i));
  CHECK(psnr(a.image, truth) > psnr(mean_fill(truth, known), truth) + 3.0);
}

TEST_CASE("a loose tolerance stops early") {
  const auto truth = smooth_phantom(32, 9);
  const auto known = random_mask(32, 32, 0.3, 1);
  auto cfg = quick_config();
  cfg.tolerance = 0.5;
  const auto r = recover_image(truth, known, cfg);
  CHECK(r.iterations < cfg.max_iterations);
  CHECK(r.last_change < 0.5);
}
