#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "epsaudit/errors.hpp"
#include "epsaudit/loss_model.hpp"
#include "epsaudit/rng.hpp"

using namespace epsaudit;

TEST_CASE("binary loss matches hand-worked values") {
  CHECK(binary_loss({{0.5}, {1}}) == doctest::Approx(0.0).epsilon(1e-12));
  // log(0.8) - log(0.2) = log 4
  CHECK(binary_loss({{0.8}, {1}}) ==
        doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  CHECK(binary_loss({{0.8}, {0}}) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("binary loss rejects degenerate inputs") {
  CHECK_THROWS_AS(binary_loss({{0.0}, {1}}), DomainError);
  CHECK_THROWS_AS(binary_loss({{1.0}, {0}}), DomainError);
  CHECK_THROWS_AS(binary_loss({{0.5}, {2}}), DomainError);
  CHECK_THROWS_AS(binary_loss({{0.5, 0.5}, {1}}), ShapeError);
}

TEST_CASE("multiclass loss matches hand-worked values") {
  CHECK(multiclass_loss({{0.5, 0.25, 0.25}, {1, 0, 0}}) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(multiclass_loss({{0.8, 0.1, 0.1}, {1, 0, 0}}) ==
        doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  CHECK(multiclass_loss({{0.1, 0.8, 0.1}, {0, 1, 0}}) ==
        doctest::Approx(-std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("multiclass loss shape errors") {
  CHECK_THROWS_AS(multiclass_loss({{0.5, 0.5}, {1, 0, 0}}), ShapeError);
  CHECK_THROWS_AS(multiclass_loss({{0.5, 0.25, 0.25}, {1, 1, 0}}), ShapeError);
  CHECK_THROWS_AS(multiclass_loss({{0.5, 0.25, 0.25}, {0, 0, 0}}), ShapeError);
}

TEST_CASE("prediction clipping pulls saturated outputs inside (0,1)") {
  const auto clipped = clip_prediction({{0.0, 1.0}, {1, 0}});
  CHECK(clipped.prediction[0] == doctest::Approx(1e-12));
  CHECK(clipped.prediction[1] == doctest::Approx(1.0 - 1e-12));
  const auto untouched = clip_prediction({{0.0}, {1}}, false);
  CHECK(untouched.prediction[0] == 0.0);
}

TEST_CASE("antisymmetry: flipping the binary label flips the sign exactly") {
  Rng rng(20240517);
  for (int i = 0; i < 10000; ++i) {
    const double f = rng.uniform_pos();
    const double l0 = binary_loss({{f}, {0}});
    const double l1 = binary_loss({{f}, {1}});
    REQUIRE(l0 == -l1);  // (1-2y) is exactly +-1
  }
}

TEST_CASE("multiclass reduces to the hot component's binary expression") {
  Rng rng(9921);
  for (int i = 0; i < 10000; ++i) {
    const int classes = 2 + static_cast<int>(rng.next_u64() % 6);
    PredictionRecord record;
    for (int c = 0; c < classes; ++c) {
      record.prediction.push_back(0.01 + 0.98 * rng.uniform());
    }
    record.label.assign(classes, 0);
    const int hot = static_cast<int>(rng.next_u64() % classes);
    record.label[hot] = 1;
    const double f = record.prediction[hot];
    const double expected = -(std::log(f) - std::log(1.0 - f));
    REQUIRE(multiclass_loss(record) == expected);
  }
}

TEST_CASE("transform endpoints match the hand-computed logit values") {
  LossSet train{{0.0, 1.0, 2.0}, LossRole::training, "t"};
  LossSet pop{{3.0, 4.0, 10.0}, LossRole::population, "p"};
  const auto [tr, pp] = transform_losses(train, pop, 1.0);
  // Joint min (0.0) -> normalized 0 -> p = e^{-1} -> logit = -0.5413249...
  const double lo_expected = std::log(std::exp(-1.0) / (1.0 - std::exp(-1.0)));
  const double hi_expected = std::log(std::exp(-2.0) / (1.0 - std::exp(-2.0)));
  CHECK(tr.values[0] == doctest::Approx(lo_expected).epsilon(1e-12));
  CHECK(lo_expected == doctest::Approx(-0.5413249).epsilon(1e-6));
  // Joint max (10.0) -> normalized 1 -> p = e^{-2} -> logit = -1.8545865...
  CHECK(pp.values[2] == doctest::Approx(hi_expected).epsilon(1e-12));
  CHECK(hi_expected == doctest::Approx(-1.8545865).epsilon(1e-6));
  CHECK(tr.norm_min == 0.0);
  CHECK(tr.norm_max == 10.0);
  CHECK(pp.norm_min == 0.0);
  CHECK(pp.norm_max == 10.0);
  CHECK(tr.shift_alpha == 1.0);
}

TEST_CASE("transform rejects identical losses") {
  LossSet train{{5.0}, LossRole::training, "t"};
  LossSet pop{{5.0}, LossRole::population, "p"};
  CHECK_THROWS_AS(transform_losses(train, pop, 1.0), DegenerateLossesError);
}

TEST_CASE("transform rejects empty or non-finite sets") {
  LossSet empty{{}, LossRole::training, "t"};
  LossSet ok{{1.0, 2.0}, LossRole::population, "p"};
  CHECK_THROWS_AS(transform_losses(empty, ok, 1.0), EmptySampleError);
  LossSet bad{{1.0, std::nan("")}, LossRole::training, "t"};
  CHECK_THROWS_AS(transform_losses(bad, ok, 1.0), DomainError);
}

TEST_CASE("transform strictly reverses the rank order of raw losses") {
  Rng rng(777);
  for (int round = 0; round < 50; ++round) {
    std::vector<double> raw;
    for (int i = 0; i < 40; ++i) raw.push_back(rng.normal() * 10.0);
    LossSet train{raw, LossRole::training, "t"};
    LossSet pop{{*std::min_element(raw.begin(), raw.end()) - 1.0,
                 *std::max_element(raw.begin(), raw.end()) + 1.0},
                LossRole::population, "p"};
    const auto [tr, pp] = transform_losses(train, pop, 1.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      for (std::size_t j = i + 1; j < raw.size(); ++j) {
        if (raw[i] < raw[j]) {
          REQUIRE(tr.values[i] > tr.values[j]);
        } else if (raw[i] > raw[j]) {
          REQUIRE(tr.values[i] < tr.values[j]);
        }
      }
    }
  }
}

TEST_CASE("transform range for alpha=1 stays inside the logit band") {
  const double lo = std::log(std::exp(-2.0) / (1.0 - std::exp(-2.0)));
  const double hi = std::log(std::exp(-1.0) / (1.0 - std::exp(-1.0)));
  Rng rng(31337);
  for (int round = 0; round < 20; ++round) {
    std::vector<double> a, b;
    for (int i = 0; i < 100; ++i) a.push_back(rng.gamma(2.0, 5.0));
    for (int i = 0; i < 100; ++i) b.push_back(rng.gamma(5.0, 5.0));
    const auto [tr, pp] = transform_losses(
        {a, LossRole::training, "t"}, {b, LossRole::population, "p"}, 1.0);
    for (double v : tr.values) {
      REQUIRE(v >= lo - 1e-12);
      REQUIRE(v <= hi + 1e-12);
    }
    for (double v : pp.values) {
      REQUIRE(v >= lo - 1e-12);
      REQUIRE(v <= hi + 1e-12);
    }
  }
}

TEST_CASE("frozen bounds transform held-out values consistently") {
  LossSet train{{0.0, 2.0}, LossRole::training, "t"};
  LossSet pop{{1.0, 4.0}, LossRole::population, "p"};
  const auto [tr, pp] = transform_losses(train, pop, 1.0);
  const auto held = transform_with_bounds({2.0}, tr.norm_min, tr.norm_max, 1.0);
  CHECK(held[0] == tr.values[1]);
}
