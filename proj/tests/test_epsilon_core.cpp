#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "epsaudit/epsilon_core.hpp"
#include "epsaudit/errors.hpp"
#include "epsaudit/numerics.hpp"
#include "epsaudit/rng.hpp"
#include "test_support.hpp"

using namespace epsaudit;
namespace ts = epsaudit::testing;

namespace {

FittedDistribution normal_dist(double mu, double sigma) {
  return FittedDistribution::normal({mu, sigma});
}

}  // namespace

// ---------------------------------------------------------------------------
// rate_curve_from_distributions
// ---------------------------------------------------------------------------

TEST_CASE("identical distributions give eta = 1 - t exactly") {
  const auto f = normal_dist(1.3, 0.8);
  const std::vector<double> grid = {0.01, 0.1, 0.25, 0.5, 0.75, 0.99};
  const auto curve = rate_curve_from_distributions(f, f, grid);
  REQUIRE(curve.pairs.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(curve.pairs[i].t == grid[i]);
    CHECK(curve.pairs[i].eta == 1.0 - grid[i]);
  }
  curve.validate();
}

TEST_CASE("normal pair rate curve at the median") {
  // F_pop = N(3,1), F_tr = N(0,1): q_{0.5} = 3, eta = 1 - Phi(3).
  const auto curve = rate_curve_from_distributions(
      normal_dist(3.0, 1.0), normal_dist(0.0, 1.0), std::vector<double>{0.5});
  CHECK(curve.pairs[0].eta == doctest::Approx(0.0013499).epsilon(1e-4));
  CHECK(curve.pairs[0].eta ==
        doctest::Approx(1.0 - ts::oracle_std_normal_cdf(3.0)).epsilon(1e-10));
}

TEST_CASE("gamma oracle rate matches a 1e7-sample Monte-Carlo band") {
  const GammaParams train{2.0, 5.0};
  const GammaParams pop{5.0, 5.0};
  const auto curve = rate_curve_from_distributions(
      FittedDistribution::gamma(pop), FittedDistribution::gamma(train),
      std::vector<double>{0.5}, CurveSource::oracle);
  const double eta = curve.pairs[0].eta;
  const double q = gamma_quantile(0.5, pop);
  const auto draws = sample_gamma(train, 10000000, 4242);
  double above = 0.0;
  for (double x : draws) above += x > q ? 1.0 : 0.0;
  const double mc = above / 1e7;
  const double se = std::sqrt(eta * (1.0 - eta) / 1e7);
  CHECK(std::fabs(eta - mc) <= 3.0 * se);
}

TEST_CASE("rate curve validation rejects bad grids") {
  const auto f = normal_dist(0.0, 1.0);
  CHECK_THROWS_AS(rate_curve_from_distributions(
                      f, f, std::vector<double>{0.5, 0.5}),
                  DomainError);
  CHECK_THROWS_AS(rate_curve_from_distributions(
                      f, f, std::vector<double>{0.0, 0.5}),
                  DomainError);
  RateCurve bad;
  bad.source = CurveSource::parametric;
  bad.pairs = {{0.1, 0.5}, {0.2, 0.8}};  // eta increases
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad.source = CurveSource::ecdf;  // step noise is tolerated for ecdf curves
  bad.validate();
}

// ---------------------------------------------------------------------------
// epsilon_star_discrete
// ---------------------------------------------------------------------------

TEST_CASE("single pair (0.1, 0.2) at delta 0 maximizes branch m1 at log 8") {
  RateCurve curve;
  curve.pairs = {{0.1, 0.2}};
  const auto r = epsilon_star_discrete(curve, 0.0);
  CHECK(r.epsilon_star == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  CHECK(r.argmax_branch == ArgmaxBranch::m1);
  CHECK(r.argmax_t == 0.1);
  CHECK(r.method == EpsilonMethod::discrete);
}

TEST_CASE("curves on the diagonal have epsilon* 0") {
  RateCurve curve;
  for (int i = 1; i < 100; ++i) {
    const double t = i / 100.0;
    curve.pairs.push_back({t, 1.0 - t});
  }
  const auto r = epsilon_star_discrete(curve, 0.0);
  CHECK(r.epsilon_star <= 1e-15);
  CHECK(r.epsilon_star >= 0.0);
}

TEST_CASE("degenerate endpoint pairs give exactly zero") {
  RateCurve curve;
  curve.pairs = {{0.0, 1.0}, {1.0, 0.0}};
  for (double delta : {0.0, 1e-5, 0.3}) {
    const auto r = epsilon_star_discrete(curve, delta);
    CHECK(r.epsilon_star == 0.0);
    CHECK(r.argmax_branch == ArgmaxBranch::unit);
  }
}

TEST_CASE("empty curve raises") {
  RateCurve curve;
  CHECK_THROWS_AS(epsilon_star_discrete(curve, 0.0), EmptyCurveError);
}

TEST_CASE("discrete accepts delta 0 but rejects delta 1") {
  RateCurve curve;
  curve.pairs = {{0.5, 0.2}};
  CHECK_NOTHROW(epsilon_star_discrete(curve, 0.0));
  CHECK_THROWS_AS(epsilon_star_discrete(curve, 1.0), DomainError);
  CHECK_THROWS_AS(epsilon_star_discrete(curve, -0.1), DomainError);
}

TEST_CASE("discrete epsilon* is non-negative on random curves") {
  Rng rng(11);
  for (int round = 0; round < 200; ++round) {
    RateCurve curve;
    double t = 0.0;
    for (int i = 0; i < 20; ++i) {
      t += rng.uniform() * 0.04 + 1e-4;
      curve.pairs.push_back({std::min(t, 1.0), rng.uniform()});
    }
    const double delta = rng.uniform() * 0.5;
    const auto r = epsilon_star_discrete(curve, delta);
    REQUIRE(r.epsilon_star >= 0.0);
  }
}

// ---------------------------------------------------------------------------
// epsilon_star_parametric
// ---------------------------------------------------------------------------

TEST_CASE("identity is exactly zero for random parameter sets") {
  Rng rng(321);
  for (int i = 0; i < 20; ++i) {
    const double mu = rng.normal() * 5.0;
    const double sigma = 0.5 + 1.5 * rng.uniform();
    const auto f = normal_dist(mu, sigma);
    for (double delta : {0.0, 1e-5, 1e-2}) {
      const auto r = epsilon_star_parametric(f, f, delta);
      REQUIRE(r.epsilon_star == 0.0);
      REQUIRE(r.argmax_branch == ArgmaxBranch::unit);
    }
  }
}

TEST_CASE("separated normal pair matches the dense-grid oracle") {
  const auto f_tr = normal_dist(0.0, 1.0);
  const auto f_pop = normal_dist(3.0, 1.0);
  const double delta = 1e-5;
  const auto r = epsilon_star_parametric(f_pop, f_tr, delta);
  const double oracle =
      ts::oracle_epsilon_star_dense(f_pop, f_tr, delta, 2000000);
  CHECK(r.epsilon_star == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(r.epsilon_star > 0.0);
}

TEST_CASE("overlapping pair at steep delta gives zero") {
  const auto r = epsilon_star_parametric(normal_dist(0.1, 1.0),
                                         normal_dist(0.0, 1.0), 0.49);
  CHECK(r.epsilon_star == 0.0);
  const double oracle = ts::oracle_epsilon_star_dense(
      normal_dist(0.1, 1.0), normal_dist(0.0, 1.0), 0.49, 200000);
  CHECK(oracle == 0.0);
}

TEST_CASE("parametric rejects bad delta and step distributions") {
  const auto f = normal_dist(0.0, 1.0);
  CHECK_THROWS_AS(epsilon_star_parametric(f, f, 1.0), DomainError);
  CHECK_THROWS_AS(epsilon_star_parametric(f, f, -0.5), DomainError);
  const auto e = FittedDistribution::empirical({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(epsilon_star_parametric(e, f, 0.1), DomainError);
}

TEST_CASE("epsilon* is non-increasing in delta") {
  Rng rng(2718);
  const std::vector<double> deltas = {0.0, 1e-6, 1e-4, 1e-2, 0.1};
  for (int i = 0; i < 25; ++i) {
    const auto f_tr = normal_dist(rng.normal(), 0.5 + rng.uniform());
    const auto f_pop =
        normal_dist(rng.normal() + 3.0 * rng.uniform(), 0.5 + rng.uniform());
    double prev = std::numeric_limits<double>::infinity();
    for (double delta : deltas) {
      const double eps =
          epsilon_star_parametric(f_pop, f_tr, delta).epsilon_star;
      REQUIRE(eps <= prev + 1e-9);
      prev = eps;
    }
  }
}

TEST_CASE("swapping the distributions leaves epsilon* unchanged at delta 0") {
  Rng rng(555);
  for (int i = 0; i < 10; ++i) {
    const auto a = normal_dist(rng.normal(), 0.5 + rng.uniform());
    const auto b = normal_dist(rng.normal() + 2.0 * rng.uniform(),
                               0.5 + rng.uniform());
    const double ab = epsilon_star_parametric(a, b, 0.0).epsilon_star;
    const double ba = epsilon_star_parametric(b, a, 0.0).epsilon_star;
    REQUIRE(ab == doctest::Approx(ba).epsilon(1e-6));
  }
}

TEST_CASE("discrete grids refine toward the parametric supremum from below") {
  const auto f_tr = normal_dist(0.0, 1.0);
  const auto f_pop = normal_dist(2.0, 1.2);
  const double delta = 1e-5;
  const double target = epsilon_star_parametric(f_pop, f_tr, delta).epsilon_star;

  Rng rng(99);
  std::vector<double> grid;
  double prev_eps = 0.0;
  for (int level = 0; level < 3; ++level) {
    // Refine by inserting new levels, keeping the previous ones.
    const int to_add = level == 0 ? 50 : 500 * level * level;
    for (int i = 0; i < to_add; ++i) {
      const double span = std::log(0.5) - std::log(delta);
      double t = std::exp(std::log(delta) + rng.uniform() * span);
      if (rng.uniform() < 0.5) t = 1.0 - t;
      if (t > delta && t < 1.0 - delta) grid.push_back(t);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const auto curve = rate_curve_from_distributions(f_pop, f_tr, grid);
    // Keep levels whose FNR also sits inside the stability window, matching
    // the parametric estimator's domain.
    RateCurve windowed;
    windowed.source = curve.source;
    for (const RatePair& p : curve.pairs) {
      if (p.eta > delta && p.eta < 1.0 - delta) windowed.pairs.push_back(p);
    }
    const double eps = epsilon_star_discrete(windowed, delta).epsilon_star;
    REQUIRE(eps >= prev_eps - 1e-12);   // non-decreasing under refinement
    REQUIRE(eps <= target + 1e-9);      // never exceeds the supremum
    prev_eps = eps;
  }
  CHECK(prev_eps > 0.5 * target);  // the dense level gets within range
}

TEST_CASE("gamma separation: epsilon* increases with d and matches oracle") {
  const double delta = 1e-5;
  double prev = -1.0;
  for (int d = 0; d <= 3; ++d) {
    const auto f_tr = FittedDistribution::gamma({2.0, 5.0});
    const auto f_pop = FittedDistribution::gamma({2.0 + d, 5.0});
    const auto r = epsilon_star_parametric(f_pop, f_tr, delta);
    if (d == 0) {
      REQUIRE(r.epsilon_star == 0.0);
    } else {
      const double oracle =
          ts::oracle_epsilon_star_dense(f_pop, f_tr, delta, 100000);
      REQUIRE(r.epsilon_star == doctest::Approx(oracle).epsilon(1e-5));
    }
    REQUIRE(r.epsilon_star > prev);
    prev = r.epsilon_star;
  }
}

TEST_CASE("each branch approaches 1-delta at one end and -inf at the other") {
  const auto f_tr = normal_dist(0.0, 1.0);
  const auto f_pop = normal_dist(3.0, 1.0);
  const double delta = 1e-6;
  auto rates_at = [&](double t, bool upper, double u) {
    const double q = upper ? f_pop.quantile_upper(u) : f_pop.quantile(t);
    return std::pair<double, double>{f_tr.sf(q), f_tr.cdf(q)};
  };
  // t -> 0: m2, m3 -> 1 - delta; m1, m4 -> -inf.
  {
    const double t = 1e-300;
    const auto [eta, ome] = rates_at(t, false, 1.0 - t);
    const double m1 = (1.0 - delta - eta) / t;
    const double m2 = (1.0 - delta - t) / eta;
    const double m3 = (eta - delta) / (1.0 - t);
    const double m4 = (t - delta) / ome;
    CHECK(m2 == doctest::Approx(1.0 - delta).epsilon(1e-9));
    CHECK(m3 == doctest::Approx(1.0 - delta).epsilon(1e-9));
    CHECK(m1 < -1e100);
    CHECK(m4 < -1e100);
  }
  // t -> 1: m1, m4 -> 1 - delta; m2, m3 -> -inf.
  {
    const double u = 1e-300;
    const auto [eta, ome] = rates_at(1.0 - u, true, u);
    const double m1 = (1.0 - delta - eta) / (1.0 - u);
    const double m2 = (u - delta) / eta;
    const double m3 = (eta - delta) / u;
    const double m4 = ((1.0 - u) - delta) / ome;
    CHECK(m1 == doctest::Approx(1.0 - delta).epsilon(1e-9));
    CHECK(m4 == doctest::Approx(1.0 - delta).epsilon(1e-9));
    CHECK(m2 < -1e100);
    CHECK(m3 < -1e100);
  }
}

// ---------------------------------------------------------------------------
// epsilon_star_ecdf
// ---------------------------------------------------------------------------

TEST_CASE("identical samples give exactly zero") {
  const auto xs = sample_gamma({2.0, 5.0}, 5000, 13);
  const auto r = epsilon_star_ecdf(xs, xs, 1e-5, 20000);
  CHECK(r.epsilon_star == 0.0);
  CHECK(r.method == EpsilonMethod::ecdf);
  CHECK(r.clamp_lo == 0.001);
  CHECK(r.clamp_hi == 0.999);
  CHECK(r.pairs_discarded > 0);
}

TEST_CASE("independent same-distribution samples overshoot the parametric fit") {
  const auto train = sample_gamma({2.0, 5.0}, 10000, 21);
  const auto pop = sample_gamma({2.0, 5.0}, 10000, 22);
  const double delta = 1e-5;
  const auto ecdf_eps = epsilon_star_ecdf(train, pop, delta, 2000000);
  CHECK(ecdf_eps.epsilon_star > 0.0);

  LossSet tr{train, LossRole::training, "t"};
  LossSet pp{pop, LossRole::population, "p"};
  const auto [ttr, tpp] = transform_losses(tr, pp, 1.0);
  const auto f_tr = FittedDistribution::normal(fit_normal(ttr.values));
  const auto f_pop = FittedDistribution::normal(fit_normal(tpp.values));
  const auto param_eps = epsilon_star_parametric(f_pop, f_tr, delta);
  CHECK(ecdf_eps.epsilon_star > param_eps.epsilon_star);
}

TEST_CASE("ecdf estimator lands near the true-CDF oracle at matched clamps") {
  // With delta = 1e-3 the parametric window equals the Appendix clamp, so the
  // empirical estimate is directly comparable to the exact-CDF value.
  const double delta = 1e-3;
  const auto train = sample_gamma({2.0, 5.0}, 100000, 71);
  const auto pop = sample_gamma({5.0, 5.0}, 100000, 72);
  const auto r = epsilon_star_ecdf(train, pop, delta, 2000000);
  const double oracle = ts::oracle_epsilon_star_dense(
      FittedDistribution::gamma({5.0, 5.0}), FittedDistribution::gamma({2.0, 5.0}),
      delta, 200000);
  CHECK(std::fabs(r.epsilon_star - oracle) <= 0.15);
}

TEST_CASE("ecdf rejects empty inputs and degenerate grids") {
  const std::vector<double> xs = {1.0, 2.0};
  const std::vector<double> empty;
  CHECK_THROWS_AS(epsilon_star_ecdf(empty, xs, 0.0, 100), EmptySampleError);
  CHECK_THROWS_AS(epsilon_star_ecdf(xs, xs, 0.0, 1), DomainError);
  // Disjoint supports: every threshold has a rate pinned to 0 or 1, so the
  // clamp removes everything.
  const std::vector<double> far = {1000.0, 2000.0};
  CHECK_THROWS_AS(epsilon_star_ecdf(xs, far, 0.0, 100), EmptyCurveError);
}

// ---------------------------------------------------------------------------
// epsilon_star_audit
// ---------------------------------------------------------------------------

TEST_CASE("audit of the same multiset is exactly zero") {
  auto values = sample_gamma({2.0, 5.0}, 500, 5);
  LossSet train{values, LossRole::training, "t"};
  std::reverse(values.begin(), values.end());
  LossSet pop{values, LossRole::population, "p"};
  AuditConfig config;
  const auto r = epsilon_star_audit(train, pop, config);
  CHECK(r.epsilon_star == 0.0);
  // auto delta = 1 / (n ln n)
  CHECK(r.delta == doctest::Approx(1.0 / (500.0 * std::log(500.0))));
}

TEST_CASE("audit errors on empty input") {
  LossSet empty{{}, LossRole::training, "t"};
  LossSet ok{{1.0, 2.0}, LossRole::population, "p"};
  CHECK_THROWS_AS(epsilon_star_audit(empty, ok, AuditConfig{}),
                  EmptySampleError);
}

TEST_CASE("audit methods dispatch and stay non-negative") {
  const auto train = sample_gamma({2.0, 5.0}, 4000, 61);
  const auto pop = sample_gamma({3.0, 5.0}, 4000, 62);
  LossSet tr{train, LossRole::training, "t"};
  LossSet pp{pop, LossRole::population, "p"};
  for (EpsilonMethod m : {EpsilonMethod::parametric, EpsilonMethod::ecdf,
                          EpsilonMethod::discrete}) {
    AuditConfig config;
    config.method = m;
    config.grid_size = 100000;
    const auto r = epsilon_star_audit(tr, pp, config);
    REQUIRE(r.epsilon_star >= 0.0);
    REQUIRE(r.method == m);
    REQUIRE(r.epsilon_star > 0.1);  // clearly separated distributions
  }
}

TEST_CASE("resolve_delta validates and applies the auto rule") {
  AuditConfig config;
  CHECK(resolve_delta(config, 1000) ==
        doctest::Approx(1.0 / (1000.0 * std::log(1000.0))).epsilon(1e-12));
  CHECK_THROWS_AS(resolve_delta(config, 1), DomainError);
  config.delta = 1.5;
  CHECK_THROWS_AS(resolve_delta(config, 1000), DomainError);
  config.delta = 0.25;
  CHECK(resolve_delta(config, 1000) == 0.25);
}
