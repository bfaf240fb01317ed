#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "epsaudit/distfit.hpp"
#include "epsaudit/loss_model.hpp"

namespace epsaudit {

// One rejection-region operating point: FPR level t with its FNR eta.
struct RatePair {
  double t = 0.0;
  double eta = 0.0;
};

// Operating point with both complements carried explicitly. Rates near 0 or
// 1 keep full precision this way; 1 - x recomputed late would not.
struct RateObservation {
  double t = 0.0;
  double one_minus_t = 1.0;
  double eta = 0.0;
  double one_minus_eta = 1.0;
};

enum class CurveSource { ecdf, parametric, oracle };

struct RateCurve {
  std::vector<RatePair> pairs;  // sorted by t
  CurveSource source = CurveSource::parametric;

  // t strictly increasing, rates in [0,1]; eta non-increasing is enforced for
  // parametric/oracle curves only (step noise exempts ecdf curves).
  void validate() const;
};

enum class EpsilonMethod { discrete, ecdf, parametric };

enum class ArgmaxBranch { m1, m2, m3, m4, unit };

std::string to_string(EpsilonMethod m);
std::string to_string(ArgmaxBranch b);
std::string to_string(CurveSource s);

struct EpsilonStarResult {
  double epsilon_star = 0.0;  // >= 0 always
  double delta = 0.0;
  EpsilonMethod method = EpsilonMethod::discrete;
  ArgmaxBranch argmax_branch = ArgmaxBranch::unit;
  double argmax_t = 0.5;
  double clamp_lo = 0.0;  // operating window applied to the rates
  double clamp_hi = 1.0;
  std::int64_t pairs_total = 0;
  std::int64_t pairs_discarded = 0;
};

// eta_t = 1 - F_tr(q_t) with q_t the t-quantile of F_pop, over a strictly
// increasing grid of levels inside (0,1).
RateCurve rate_curve_from_distributions(const FittedDistribution& f_pop,
                                        const FittedDistribution& f_tr,
                                        std::span<const double> t_grid,
                                        CurveSource source =
                                            CurveSource::parametric);

// Finite-level estimator: log of the max over pairs of the four likelihood
// ratios and 1. Zero denominators contribute nothing (treated as -inf).
// Accepts delta in [0,1).
EpsilonStarResult epsilon_star_discrete(const RateCurve& curve, double delta);

// Same formula over observations whose complements the caller supplies.
// clamp/total/discarded are diagnostics echoed into the result.
EpsilonStarResult epsilon_star_from_observations(
    std::span<const RateObservation> observations, double delta,
    EpsilonMethod method, double clamp_lo = 0.0, double clamp_hi = 1.0,
    std::int64_t pairs_total = -1, std::int64_t pairs_discarded = 0);

// Empirical-CDF estimator: thresholds at grid_size/2 equally spaced quantiles
// of each sample, rate pairs from the two eCDFs, pairs with any rate outside
// (0.001, 0.999) dropped before the discrete formula.
EpsilonStarResult epsilon_star_ecdf(std::span<const double> train,
                                    std::span<const double> pop, double delta,
                                    std::size_t grid_size = 2'000'000);

// Supremum estimator over continuous fitted CDFs: each branch maximized over
// t in (delta, 1-delta) by an endpoint-concentrated log-spaced scan plus
// golden-section refinement. Accepts delta in [0,1); at delta = 0 the window
// falls back to a numerical floor.
EpsilonStarResult epsilon_star_parametric(const FittedDistribution& f_pop,
                                          const FittedDistribution& f_tr,
                                          double delta);

struct AuditConfig {
  std::optional<double> delta;  // nullopt -> 1 / (n ln n), n = train size
  EpsilonMethod method = EpsilonMethod::parametric;
  std::size_t grid_size = 2'000'000;
  double alpha_shift = 1.0;
  bool clip_predictions = true;
  std::uint64_t seed = 0;
};

double resolve_delta(const AuditConfig& config, std::size_t train_n);

// End-to-end audit: transform both loss sets, then run the configured
// estimator (the parametric default fits a Normal to each transformed set).
EpsilonStarResult epsilon_star_audit(const LossSet& train_losses,
                                     const LossSet& pop_losses,
                                     const AuditConfig& config);

}  // namespace epsaudit
