#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "epsaudit/distfit.hpp"
#include "epsaudit/errors.hpp"
#include "epsaudit/loss_model.hpp"
#include "epsaudit/mechanism_audit.hpp"
#include "epsaudit/rng.hpp"

using namespace epsaudit;

namespace {

std::vector<double> log_spaced_grid(double lo, std::size_t n) {
  std::vector<double> grid;
  const double span = std::log(0.5) - std::log(lo);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) / static_cast<double>(n - 1);
    grid.push_back(x <= 0.5 ? std::exp(std::log(lo) + (x / 0.5) * span)
                            : 1.0 - std::exp(std::log(lo) +
                                             ((1.0 - x) / 0.5) * span));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

// A seeded ensemble of Normal fits to re-sampled Gamma losses.
EnsembleRates simulated_ensemble(int instances, std::size_t n, double pop_shape,
                                 std::uint64_t seed, double grid_lo) {
  EnsembleRates ensemble;
  ensemble.t_grid = log_spaced_grid(grid_lo, 801);
  for (int i = 0; i < instances; ++i) {
    const auto iu = static_cast<std::uint64_t>(i);
    const auto train = sample_gamma({2.0, 5.0}, n, derive_seed(seed, {iu, 1}));
    const auto pop =
        sample_gamma({pop_shape, 5.0}, n, derive_seed(seed, {iu, 2}));
    const auto [ttr, tpp] =
        transform_losses({train, LossRole::training, "t"},
                         {pop, LossRole::population, "p"}, 1.0);
    const auto f_tr = FittedDistribution::normal(fit_normal(ttr.values));
    const auto f_pop = FittedDistribution::normal(fit_normal(tpp.values));
    std::vector<double> row;
    row.reserve(ensemble.t_grid.size());
    for (double t : ensemble.t_grid) {
      row.push_back(f_tr.sf(f_pop.quantile(t)));
    }
    ensemble.per_model_fnr.push_back(std::move(row));
  }
  return ensemble;
}

}  // namespace

TEST_CASE("single-row ensemble: epsilon_bar equals that row's epsilon*") {
  const auto ensemble = simulated_ensemble(1, 2000, 3.0, 42, 1e-4);
  const double delta = 1e-4;
  const auto report = audit_mechanism(ensemble, delta);
  REQUIRE(report.per_model_eps.size() == 1);
  CHECK(report.epsilon_bar == report.per_model_eps[0]);
  // Jensen is an equality for a point mass.
  CHECK(std::fabs(report.jensen_bound - report.per_model_eps[0]) <= 1e-12);
  CHECK(report.jensen_holds);
}

TEST_CASE("two symmetric rows around the diagonal average to zero") {
  EnsembleRates ensemble;
  const double c = 0.004;
  for (int i = 1; i < 100; ++i) {
    ensemble.t_grid.push_back(i / 100.0);
  }
  std::vector<double> hi, lo;
  for (double t : ensemble.t_grid) {
    hi.push_back(std::min(1.0, 1.0 - t + c));
    lo.push_back(std::max(0.0, 1.0 - t - c));
  }
  ensemble.per_model_fnr = {hi, lo};
  CHECK(epsilon_bar(ensemble, 0.0) <= 1e-12);
}

TEST_CASE("mechanism bound never exceeds the worst instance") {
  const auto ensemble = simulated_ensemble(50, 1000, 3.0, 7, 1e-4);
  const double delta = 1e-4;
  const auto report = audit_mechanism(ensemble, delta);
  const double max_eps = *std::max_element(report.per_model_eps.begin(),
                                           report.per_model_eps.end());
  CHECK(report.epsilon_bar <= max_eps + 1e-12);
  CHECK(report.jensen_holds);
}

TEST_CASE("Jensen bound holds on every seeded ensemble") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    const auto ensemble = simulated_ensemble(50, 800, 3.0, seed, 1e-4);
    const auto report = audit_mechanism(ensemble, 1e-4);
    REQUIRE(report.epsilon_bar <= report.jensen_bound + 1e-9);
  }
}

TEST_CASE("epsilon_bar is invariant to row permutation") {
  auto ensemble = simulated_ensemble(20, 500, 4.0, 99, 1e-3);
  const double base = epsilon_bar(ensemble, 1e-3);
  Rng rng(5);
  for (int round = 0; round < 5; ++round) {
    for (std::size_t i = ensemble.per_model_fnr.size() - 1; i > 0; --i) {
      std::swap(ensemble.per_model_fnr[i],
                ensemble.per_model_fnr[rng.next_u64() % (i + 1)]);
    }
    REQUIRE(epsilon_bar(ensemble, 1e-3) ==
            doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("identical rows collapse to the per-row epsilon*") {
  auto one = simulated_ensemble(1, 1500, 3.5, 11, 1e-4);
  EnsembleRates many;
  many.t_grid = one.t_grid;
  for (int i = 0; i < 8; ++i) many.per_model_fnr.push_back(one.per_model_fnr[0]);
  const double single = epsilon_bar(one, 1e-4);
  CHECK(epsilon_bar(many, 1e-4) == doctest::Approx(single).epsilon(1e-9));
}

TEST_CASE("jensen_check examples") {
  const std::vector<double> zeros = {0.0, 0.0};
  const auto jc = jensen_check(zeros, 0.0);
  CHECK(jc.bound == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(jc.holds);
  const std::vector<double> empty;
  CHECK_THROWS_AS(jensen_check(empty, 0.0), EmptyEnsembleError);
  // Large values stay finite thanks to the max shift.
  const std::vector<double> large = {700.0, 710.0};
  const auto big = jensen_check(large, 705.0);
  CHECK(std::isfinite(big.bound));
  CHECK(big.bound == doctest::Approx(710.0 + std::log(0.5 * (1 + std::exp(-10.0)))));
}

TEST_CASE("ensemble validation catches shape and range errors") {
  EnsembleRates empty;
  empty.t_grid = {0.5};
  CHECK_THROWS_AS(empty.validate(), EmptyEnsembleError);
  EnsembleRates bad;
  bad.t_grid = {0.2, 0.4};
  bad.per_model_fnr = {{0.5}};
  CHECK_THROWS_AS(bad.validate(), ShapeError);
  bad.per_model_fnr = {{0.5, 1.5}};
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
