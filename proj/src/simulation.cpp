#include "epsaudit/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "epsaudit/epsilon_core.hpp"
#include "epsaudit/errors.hpp"
#include "epsaudit/loss_model.hpp"
#include "epsaudit/numerics.hpp"
#include "epsaudit/rng.hpp"

namespace epsaudit {

namespace {

// Stream tags for per-cell seed derivation.
constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kPopStream = 2;

double parametric_eps_on_samples(const std::vector<double>& train,
                                 const std::vector<double>& pop, double delta,
                                 double alpha) {
  LossSet tr{train, LossRole::training, "sim-train"};
  LossSet pp{pop, LossRole::population, "sim-pop"};
  const auto [ttr, tpp] = transform_losses(tr, pp, alpha);
  const auto f_tr = FittedDistribution::normal(fit_normal(ttr.values));
  const auto f_pop = FittedDistribution::normal(fit_normal(tpp.values));
  return epsilon_star_parametric(f_pop, f_tr, delta).epsilon_star;
}

}  // namespace

std::string to_string(SimMethod m) {
  switch (m) {
    case SimMethod::true_cdf:
      return "true_cdf";
    case SimMethod::ecdf:
      return "ecdf";
    case SimMethod::parametric:
      return "parametric";
  }
  return "unknown";
}

void SimConfig::validate() const {
  if (!(k1 > 0.0) || !(theta1 > 0.0)) {
    throw DomainError("gamma parameters must be positive");
  }
  if (d_values.empty() || n_values.empty()) {
    throw DomainError("d_values and n_values must be non-empty");
  }
  for (int d : d_values) {
    if (d < 0) throw DomainError("shift d must be non-negative");
  }
  for (std::size_t n : n_values) {
    if (n < 2) throw DomainError("sample sizes must be at least 2");
  }
  if (repeats < 1) throw DomainError("repeats must be at least 1");
  if (!(delta >= 0.0 && delta < 1.0)) throw DomainError("delta must lie in [0,1)");
}

double true_epsilon_star_gamma(double k1, double theta1, int d, double delta) {
  const auto f_tr = FittedDistribution::gamma(GammaParams{k1, theta1});
  const auto f_pop =
      FittedDistribution::gamma(GammaParams{k1 + static_cast<double>(d), theta1});
  return epsilon_star_parametric(f_pop, f_tr, delta).epsilon_star;
}

SimResult run_shift_experiment(const SimConfig& cfg) {
  cfg.validate();
  SimResult result;
  result.config = cfg;
  for (int d : cfg.d_values) {
    const double true_eps =
        true_epsilon_star_gamma(cfg.k1, cfg.theta1, d, cfg.delta);
    const GammaParams train_dist{cfg.k1, cfg.theta1};
    const GammaParams pop_dist{cfg.k1 + static_cast<double>(d), cfg.theta1};
    for (std::size_t n : cfg.n_values) {
      const std::size_t grid = std::min(cfg.max_grid, 200 * n);
      for (int r = 0; r < cfg.repeats; ++r) {
        const auto du = static_cast<std::uint64_t>(d);
        const auto ru = static_cast<std::uint64_t>(r);
        const auto train = sample_gamma(
            train_dist, n, derive_seed(cfg.seed, {du, n, ru, kTrainStream}));
        const auto pop = sample_gamma(
            pop_dist, n, derive_seed(cfg.seed, {du, n, ru, kPopStream}));

        result.rows.push_back(SimRow{d, n, SimMethod::true_cdf, r, true_eps});
        result.rows.push_back(
            SimRow{d, n, SimMethod::ecdf, r,
                   epsilon_star_ecdf(train, pop, cfg.delta, grid).epsilon_star});
        result.rows.push_back(
            SimRow{d, n, SimMethod::parametric, r,
                   parametric_eps_on_samples(train, pop, cfg.delta,
                                             cfg.alpha_shift)});
      }
    }
  }
  return result;
}

SimResult run_identity_experiment(SimConfig cfg) {
  cfg.d_values = {0};
  return run_shift_experiment(cfg);
}

std::vector<SimAggregate> SimResult::aggregates() const {
  std::vector<SimAggregate> out;
  for (const SimRow& row : rows) {
    SimAggregate* agg = nullptr;
    for (auto& a : out) {
      if (a.d == row.d && a.n == row.n && a.method == row.method) {
        agg = &a;
        break;
      }
    }
    if (!agg) {
      out.push_back(SimAggregate{row.d, row.n, row.method, 0.0, 0.0, {}});
      agg = &out.back();
    }
    agg->values.push_back(row.epsilon_star);
  }
  for (auto& a : out) {
    a.mean_eps = mean(a.values);
    a.std_eps = sample_std(a.values);
  }
  return out;
}

const SimAggregate* SimResult::find_aggregate(std::vector<SimAggregate>& aggs,
                                              int d, std::size_t n,
                                              SimMethod m) const {
  for (const auto& a : aggs) {
    if (a.d == d && a.n == n && a.method == m) return &a;
  }
  return nullptr;
}

std::vector<ScatterRow> boundary_scatter(const FittedDistribution& f_pop,
                                         const FittedDistribution& f_tr,
                                         double delta, std::size_t grid_size) {
  if (grid_size < 2) throw DomainError("grid_size must be at least 2");
  constexpr double kRateFloor = 1e-9;
  std::vector<ScatterRow> rows;
  rows.reserve(grid_size);
  for (std::size_t i = 1; i + 1 <= grid_size; ++i) {
    const double t =
        static_cast<double>(i) / (static_cast<double>(grid_size) + 1.0);
    const double q = f_pop.quantile(t);
    const double eta = f_tr.sf(q);
    const double tpr = f_tr.cdf(q);
    if (t < kRateFloor || eta < kRateFloor || 1.0 - t < kRateFloor ||
        1.0 - eta < kRateFloor) {
      continue;
    }
    rows.push_back(ScatterRow{0.5 * (tpr + t),
                              (1.0 - delta - eta) / t,
                              (1.0 - delta - t) / eta});
  }
  return rows;
}

}  // namespace epsaudit
