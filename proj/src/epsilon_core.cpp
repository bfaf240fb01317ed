#include "epsaudit/epsilon_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "epsaudit/errors.hpp"

namespace epsaudit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Window floor used when delta == 0: the supremum domain (0,1) is open, so
// the scan needs a finite edge. Any floor below the smallest delta of
// interest preserves monotonicity of epsilon* in delta.
constexpr double kZeroDeltaFloor = 1e-15;

constexpr int kScanPoints = 10000;
constexpr double kEcdfClampLo = 0.001;
constexpr double kEcdfClampHi = 0.999;

constexpr ArgmaxBranch kBranches[4] = {ArgmaxBranch::m1, ArgmaxBranch::m2,
                                       ArgmaxBranch::m3, ArgmaxBranch::m4};

// log of the branch ratio, or -inf when the numerator is non-positive or the
// denominator vanishes (such pairs carry no evidence under the max-with-1).
double branch_log(ArgmaxBranch branch, const RateObservation& obs, double delta) {
  double num = 0.0;
  double den = 0.0;
  switch (branch) {
    case ArgmaxBranch::m1:
      num = obs.one_minus_eta - delta;
      den = obs.t;
      break;
    case ArgmaxBranch::m2:
      num = obs.one_minus_t - delta;
      den = obs.eta;
      break;
    case ArgmaxBranch::m3:
      num = obs.eta - delta;
      den = obs.one_minus_t;
      break;
    case ArgmaxBranch::m4:
      num = obs.t - delta;
      den = obs.one_minus_eta;
      break;
    case ArgmaxBranch::unit:
      return 0.0;
  }
  if (!(num > 0.0) || !(den > 0.0)) return -kInf;
  return std::log(num) - std::log(den);
}

struct BranchBest {
  double log_value = -kInf;
  ArgmaxBranch branch = ArgmaxBranch::unit;
  double t = 0.5;
};

// Maximum of the four ratios over a finite list of operating points.
BranchBest best_over_observations(std::span<const RateObservation> observations,
                                  double delta) {
  BranchBest best;
  for (const RateObservation& obs : observations) {
    for (ArgmaxBranch branch : kBranches) {
      const double v = branch_log(branch, obs, delta);
      if (v > best.log_value) {
        best = BranchBest{v, branch, obs.t};
      }
    }
  }
  return best;
}

EpsilonStarResult finish_result(const BranchBest& best, double delta,
                                EpsilonMethod method, double clamp_lo,
                                double clamp_hi, std::int64_t total,
                                std::int64_t discarded) {
  EpsilonStarResult r;
  r.delta = delta;
  r.method = method;
  r.clamp_lo = clamp_lo;
  r.clamp_hi = clamp_hi;
  r.pairs_total = total;
  r.pairs_discarded = discarded;
  if (std::isfinite(best.log_value) && best.log_value > 0.0) {
    r.epsilon_star = best.log_value;
    r.argmax_branch = best.branch;
    r.argmax_t = best.t;
  } else {
    r.epsilon_star = 0.0;
    r.argmax_branch = ArgmaxBranch::unit;
    r.argmax_t = std::isfinite(best.log_value) ? best.t : 0.5;
  }
  return r;
}

void check_delta(double delta) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw DomainError("delta must lie in [0, 1)");
  }
}

// ---------------------------------------------------------------------------
// Parametric supremum machinery
// ---------------------------------------------------------------------------

// Maps a scan coordinate x in [0,1] to (t, 1-t). Both halves are log-spaced
// toward their endpoint, which is where the maximizing thresholds live.
struct ScanMap {
  double w;       // window edge: t runs over [w, 1-w]
  double log_w;   // cached log(w)
  double span;    // log(0.5) - log(w)

  explicit ScanMap(double edge)
      : w(edge), log_w(std::log(edge)), span(std::log(0.5) - std::log(edge)) {}

  struct Coord {
    double t;
    double omt;
    bool upper_side;
  };

  Coord at(double x) const {
    if (x <= 0.0) return {w, 1.0 - w, false};
    if (x >= 1.0) return {1.0 - w, w, true};
    if (x <= 0.5) {
      const double t = std::exp(log_w + (x / 0.5) * span);
      return {t, 1.0 - t, false};
    }
    const double u = std::exp(log_w + ((1.0 - x) / 0.5) * span);
    return {1.0 - u, u, true};
  }
};

class RateEvaluator {
 public:
  RateEvaluator(const FittedDistribution& f_pop, const FittedDistribution& f_tr)
      : pop_(f_pop), tr_(f_tr), identical_(f_pop.same_parameters(f_tr)) {}

  RateObservation at(const ScanMap::Coord& c) const {
    if (identical_) {
      // Identical fits sit exactly on the diagonal eta = 1 - t.
      return RateObservation{c.t, c.omt, c.omt, c.t};
    }
    const double q =
        c.upper_side ? pop_.quantile_upper(c.omt) : pop_.quantile(c.t);
    return RateObservation{c.t, c.omt, tr_.sf(q), tr_.cdf(q)};
  }

 private:
  const FittedDistribution& pop_;
  const FittedDistribution& tr_;
  bool identical_;
};

// Golden-section maximization of g over [a, b]; assumes the scan already
// isolated the peak to this bracket.
template <typename G>
std::pair<double, double> golden_max(G&& g, double a, double b) {
  constexpr double invphi = 0.6180339887498949;
  constexpr double invphi2 = 0.3819660112501051;
  double c = a + invphi2 * (b - a);
  double d = a + invphi * (b - a);
  double gc = g(c);
  double gd = g(d);
  while (b - a > 1e-14) {
    if (gc >= gd) {
      b = d;
      d = c;
      gd = gc;
      c = a + invphi2 * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + invphi * (b - a);
      gd = g(d);
    }
  }
  return gc >= gd ? std::make_pair(c, gc) : std::make_pair(d, gd);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

std::string to_string(EpsilonMethod m) {
  switch (m) {
    case EpsilonMethod::discrete:
      return "discrete";
    case EpsilonMethod::ecdf:
      return "ecdf";
    case EpsilonMethod::parametric:
      return "parametric";
  }
  return "unknown";
}

std::string to_string(ArgmaxBranch b) {
  switch (b) {
    case ArgmaxBranch::m1:
      return "m1";
    case ArgmaxBranch::m2:
      return "m2";
    case ArgmaxBranch::m3:
      return "m3";
    case ArgmaxBranch::m4:
      return "m4";
    case ArgmaxBranch::unit:
      return "unit";
  }
  return "unknown";
}

std::string to_string(CurveSource s) {
  switch (s) {
    case CurveSource::ecdf:
      return "ecdf";
    case CurveSource::parametric:
      return "parametric";
    case CurveSource::oracle:
      return "oracle";
  }
  return "unknown";
}

void RateCurve::validate() const {
  double prev_t = -1.0;
  double prev_eta = 2.0;
  const bool strict = source != CurveSource::ecdf;
  for (const RatePair& p : pairs) {
    if (!(p.t >= 0.0 && p.t <= 1.0 && p.eta >= 0.0 && p.eta <= 1.0)) {
      throw DomainError("rate outside [0, 1]");
    }
    if (strict ? !(p.t > prev_t) : !(p.t >= prev_t)) {
      throw DomainError("curve levels must increase");
    }
    if (strict && p.eta > prev_eta) {
      throw DomainError("eta must be non-increasing along the curve");
    }
    prev_t = p.t;
    prev_eta = p.eta;
  }
}

RateCurve rate_curve_from_distributions(const FittedDistribution& f_pop,
                                        const FittedDistribution& f_tr,
                                        std::span<const double> t_grid,
                                        CurveSource source) {
  const bool identical = f_pop.same_parameters(f_tr);
  RateCurve curve;
  curve.source = source;
  curve.pairs.reserve(t_grid.size());
  double prev = 0.0;
  for (double t : t_grid) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("grid level outside (0,1)");
    if (!(t > prev)) throw DomainError("grid levels must strictly increase");
    prev = t;
    if (identical) {
      curve.pairs.push_back(RatePair{t, 1.0 - t});
    } else {
      const double q = f_pop.quantile(t);
      curve.pairs.push_back(RatePair{t, f_tr.sf(q)});
    }
  }
  return curve;
}

EpsilonStarResult epsilon_star_discrete(const RateCurve& curve, double delta) {
  check_delta(delta);
  if (curve.pairs.empty()) throw EmptyCurveError("rate curve is empty");
  std::vector<RateObservation> obs;
  obs.reserve(curve.pairs.size());
  for (const RatePair& p : curve.pairs) {
    if (!(p.t >= 0.0 && p.t <= 1.0 && p.eta >= 0.0 && p.eta <= 1.0)) {
      throw DomainError("rate outside [0, 1]");
    }
    obs.push_back(RateObservation{p.t, 1.0 - p.t, p.eta, 1.0 - p.eta});
  }
  const BranchBest best = best_over_observations(obs, delta);
  return finish_result(best, delta, EpsilonMethod::discrete, 0.0, 1.0,
                       static_cast<std::int64_t>(obs.size()), 0);
}

EpsilonStarResult epsilon_star_ecdf(std::span<const double> train,
                                    std::span<const double> pop, double delta,
                                    std::size_t grid_size) {
  check_delta(delta);
  if (train.empty() || pop.empty()) {
    throw EmptySampleError("both loss samples must be non-empty");
  }
  if (grid_size < 2) throw DomainError("grid_size must be at least 2");

  std::vector<double> tr(train.begin(), train.end());
  std::vector<double> pp(pop.begin(), pop.end());
  std::sort(tr.begin(), tr.end());
  std::sort(pp.begin(), pp.end());

  const std::size_t m = grid_size / 2;
  auto quantile_of = [](const std::vector<double>& sorted, double level) {
    auto k = static_cast<std::size_t>(
        std::ceil(level * static_cast<double>(sorted.size())));
    k = std::min(std::max<std::size_t>(k, 1), sorted.size());
    return sorted[k - 1];
  };

  std::vector<double> thresholds;
  thresholds.reserve(2 * m);
  for (std::size_t i = 0; i < m; ++i) {
    const double level = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
    thresholds.push_back(quantile_of(tr, level));
    thresholds.push_back(quantile_of(pp, level));
  }
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const double n_tr = static_cast<double>(tr.size());
  const double n_pp = static_cast<double>(pp.size());
  std::vector<RateObservation> kept;
  kept.reserve(thresholds.size());
  for (double tau : thresholds) {
    const auto c_pp = static_cast<double>(
        std::upper_bound(pp.begin(), pp.end(), tau) - pp.begin());
    const auto c_tr = static_cast<double>(
        std::upper_bound(tr.begin(), tr.end(), tau) - tr.begin());
    const RateObservation obs{c_pp / n_pp, (n_pp - c_pp) / n_pp,
                      (n_tr - c_tr) / n_tr, c_tr / n_tr};
    if (obs.t > kEcdfClampLo && obs.t < kEcdfClampHi &&
        obs.eta > kEcdfClampLo && obs.eta < kEcdfClampHi) {
      kept.push_back(obs);
    }
  }
  if (kept.empty()) {
    throw EmptyCurveError(
        "clamping removed every rate pair; samples are too small or "
        "indistinguishable at the working resolution");
  }
  const BranchBest best = best_over_observations(kept, delta);
  return finish_result(best, delta, EpsilonMethod::ecdf, kEcdfClampLo,
                       kEcdfClampHi,
                       static_cast<std::int64_t>(thresholds.size()),
                       static_cast<std::int64_t>(thresholds.size() -
                                                 kept.size()));
}

EpsilonStarResult epsilon_star_parametric(const FittedDistribution& f_pop,
                                          const FittedDistribution& f_tr,
                                          double delta) {
  check_delta(delta);
  if (!f_pop.is_continuous() || !f_tr.is_continuous()) {
    throw DomainError(
        "parametric epsilon* needs continuous distributions on both sides");
  }
  const double edge = std::max(delta, kZeroDeltaFloor);
  const ScanMap map(edge);
  const RateEvaluator rates(f_pop, f_tr);

  // Both rates are restricted to the window: observations whose FNR leaves
  // [edge, 1-edge] are discarded, mirroring the FPR-side restriction. This
  // keeps the estimator symmetric under swapping the two distributions.
  auto windowed = [&](ArgmaxBranch branch, const RateObservation& obs) {
    if (obs.eta < edge || obs.one_minus_eta < edge) return -kInf;
    return branch_log(branch, obs, delta);
  };
  auto value_at = [&](double x, ArgmaxBranch branch) {
    return windowed(branch, rates.at(map.at(x)));
  };

  // Coarse scan shared by all four branches.
  std::vector<std::array<double, 4>> scan(kScanPoints);
  std::vector<double> scan_t(kScanPoints);
  for (int i = 0; i < kScanPoints; ++i) {
    const double x = static_cast<double>(i) / (kScanPoints - 1);
    const RateObservation obs = rates.at(map.at(x));
    scan_t[i] = obs.t;
    for (int b = 0; b < 4; ++b) {
      scan[i][b] = windowed(kBranches[b], obs);
    }
  }

  // The FNR-window boundary can carry a branch supremum (the objective jumps
  // there), so evaluate observations sitting a hair inside that boundary.
  std::vector<RateObservation> boundary_obs;
  if (!f_pop.same_parameters(f_tr)) {
    const double inside = edge * (1.0 + 1e-9);
    for (double q : {f_tr.quantile(inside), f_tr.quantile_upper(inside)}) {
      const RateObservation obs{f_pop.cdf(q), f_pop.sf(q), f_tr.sf(q), f_tr.cdf(q)};
      if (obs.t >= edge && obs.one_minus_t >= edge) boundary_obs.push_back(obs);
    }
  }

  BranchBest best;
  for (int b = 0; b < 4; ++b) {
    int best_i = 0;
    for (int i = 1; i < kScanPoints; ++i) {
      if (scan[i][b] > scan[best_i][b]) best_i = i;
    }
    double branch_value = scan[best_i][b];
    double branch_t = scan_t[best_i];
    const ArgmaxBranch branch = kBranches[b];
    if (std::isfinite(branch_value)) {
      const double lo = static_cast<double>(std::max(0, best_i - 1)) /
                        (kScanPoints - 1);
      const double hi =
          static_cast<double>(std::min(kScanPoints - 1, best_i + 1)) /
          (kScanPoints - 1);
      auto [x_ref, v_ref] =
          golden_max([&](double x) { return value_at(x, branch); }, lo, hi);
      if (v_ref > branch_value) {
        branch_value = v_ref;
        branch_t = rates.at(map.at(x_ref)).t;
      }
    }
    for (const RateObservation& obs : boundary_obs) {
      const double v = windowed(branch, obs);
      if (v > branch_value) {
        branch_value = v;
        branch_t = obs.t;
      }
    }
    // The unclamped endpoint limit of every branch is 1 - delta.
    branch_value = std::max(branch_value, std::log1p(-delta));
    if (branch_value > best.log_value) {
      best = BranchBest{branch_value, branch, branch_t};
    }
  }
  return finish_result(best, delta, EpsilonMethod::parametric, edge,
                       1.0 - edge, kScanPoints, 0);
}

double resolve_delta(const AuditConfig& config, std::size_t train_n) {
  if (config.delta.has_value()) {
    check_delta(*config.delta);
    return *config.delta;
  }
  if (train_n < 2) {
    throw DomainError("automatic delta needs a training set of size >= 2");
  }
  const double n = static_cast<double>(train_n);
  return 1.0 / (n * std::log(n));
}

EpsilonStarResult epsilon_star_audit(const LossSet& train_losses,
                                     const LossSet& pop_losses,
                                     const AuditConfig& config) {
  train_losses.validate();
  pop_losses.validate();
  const double delta = resolve_delta(config, train_losses.values.size());

  switch (config.method) {
    case EpsilonMethod::parametric: {
      const auto [tr, pp] =
          transform_losses(train_losses, pop_losses, config.alpha_shift);
      const auto f_tr = FittedDistribution::normal(fit_normal(tr.values));
      const auto f_pop = FittedDistribution::normal(fit_normal(pp.values));
      return epsilon_star_parametric(f_pop, f_tr, delta);
    }
    case EpsilonMethod::ecdf:
      return epsilon_star_ecdf(train_losses.values, pop_losses.values, delta,
                               config.grid_size);
    case EpsilonMethod::discrete: {
      // Thresholds at equally spaced quantile levels of the population eCDF.
      std::vector<double> pp(pop_losses.values);
      std::vector<double> tr(train_losses.values);
      std::sort(pp.begin(), pp.end());
      std::sort(tr.begin(), tr.end());
      const std::size_t g = std::max<std::size_t>(config.grid_size, 2);
      const double n_pp = static_cast<double>(pp.size());
      const double n_tr = static_cast<double>(tr.size());
      std::vector<RateObservation> obs;
      obs.reserve(g);
      for (std::size_t i = 1; i <= g; ++i) {
        const double level =
            static_cast<double>(i) / (static_cast<double>(g) + 1.0);
        auto k = static_cast<std::size_t>(std::ceil(level * n_pp));
        k = std::min(std::max<std::size_t>(k, 1), pp.size());
        const double tau = pp[k - 1];
        const auto c_pp = static_cast<double>(
            std::upper_bound(pp.begin(), pp.end(), tau) - pp.begin());
        const auto c_tr = static_cast<double>(
            std::upper_bound(tr.begin(), tr.end(), tau) - tr.begin());
        obs.push_back(RateObservation{c_pp / n_pp, (n_pp - c_pp) / n_pp,
                              (n_tr - c_tr) / n_tr, c_tr / n_tr});
      }
      const BranchBest best = best_over_observations(obs, delta);
      return finish_result(best, delta, EpsilonMethod::discrete, 0.0, 1.0,
                           static_cast<std::int64_t>(obs.size()), 0);
    }
  }
  throw DomainError("unknown epsilon* method");
}

}  // namespace epsaudit
