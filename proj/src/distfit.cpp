#include "epsaudit/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "epsaudit/errors.hpp"
#include "epsaudit/numerics.hpp"
#include "epsaudit/rng.hpp"

namespace epsaudit {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log(sqrt(2*pi))
constexpr double kEmVarianceFloor = 1e-9;
constexpr int kEmMaxIterations = 500;
constexpr double kEmLogLikTol = 1e-8;
constexpr int kEmRestarts = 5;

void check_probability_open(double t, const char* what) {
  if (!(t > 0.0 && t < 1.0)) {
    throw DomainError(std::string(what) + " must lie strictly inside (0,1)");
  }
}

// Acklam's rational approximation to the inverse normal CDF, lower region.
// Gives ~1e-9 relative accuracy; Newton steps below polish to full precision.
double acklam_lower(double p) {
  static constexpr double a[6] = {
      -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {
      -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[6] = {
      -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q +
            c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r +
          a[5]) *
         q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// z < 0 with cdf(z) = p, for p in (0, 0.5].
double negative_tail_quantile(double p) {
  double z = acklam_lower(p);
  for (int i = 0; i < 2; ++i) {
    const double pdf = std_normal_pdf(z);
    if (pdf <= 0.0) break;
    z -= (std_normal_cdf(z) - p) / pdf;
  }
  return z;
}

}  // namespace

// ---------------------------------------------------------------------------
// Normal
// ---------------------------------------------------------------------------

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double std_normal_sf(double z) { return 0.5 * std::erfc(z / kSqrt2); }

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z - kLogSqrt2Pi); }

double std_normal_quantile(double t) {
  check_probability_open(t, "quantile level");
  return t <= 0.5 ? negative_tail_quantile(t)
                  : -negative_tail_quantile(1.0 - t);
}

double std_normal_quantile_upper(double u) {
  check_probability_open(u, "upper quantile level");
  return u <= 0.5 ? -negative_tail_quantile(u)
                  : negative_tail_quantile(1.0 - u);
}

double normal_cdf(double x, const NormalParams& p) {
  return std_normal_cdf((x - p.mu) / p.sigma);
}

double normal_sf(double x, const NormalParams& p) {
  return std_normal_sf((x - p.mu) / p.sigma);
}

double normal_pdf(double x, const NormalParams& p) {
  return std_normal_pdf((x - p.mu) / p.sigma) / p.sigma;
}

double normal_quantile(double t, const NormalParams& p) {
  return p.mu + p.sigma * std_normal_quantile(t);
}

double normal_quantile_upper(double u, const NormalParams& p) {
  return p.mu + p.sigma * std_normal_quantile_upper(u);
}

// ---------------------------------------------------------------------------
// Gamma
// ---------------------------------------------------------------------------

namespace {

// Series expansion of P(a, z); accurate for z < a + 1.
double gamma_p_series(double a, double z) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int i = 0; i < 10000; ++i) {
    ap += 1.0;
    del *= z / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
  }
  const double log_pref = a * std::log(z) - z - std::lgamma(a);
  return sum * std::exp(log_pref);
}

// Lentz continued fraction for Q(a, z); accurate for z >= a + 1.
double gamma_q_cf(double a, double z) {
  constexpr double tiny = 1e-300;
  double b = z + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  const double log_pref = a * std::log(z) - z - std::lgamma(a);
  return h * std::exp(log_pref);
}

void check_gamma_params(const GammaParams& p) {
  if (!(p.shape_k > 0.0) || !(p.scale_theta > 0.0)) {
    throw DomainError("gamma shape and scale must be positive");
  }
}

}  // namespace

double regularized_gamma_p(double a, double z) {
  if (z <= 0.0) return 0.0;
  if (z < a + 1.0) return gamma_p_series(a, z);
  return 1.0 - gamma_q_cf(a, z);
}

double regularized_gamma_q(double a, double z) {
  if (z <= 0.0) return 1.0;
  if (z < a + 1.0) return 1.0 - gamma_p_series(a, z);
  return gamma_q_cf(a, z);
}

double gamma_cdf(double x, const GammaParams& p) {
  check_gamma_params(p);
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(p.shape_k, x / p.scale_theta);
}

double gamma_sf(double x, const GammaParams& p) {
  check_gamma_params(p);
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(p.shape_k, x / p.scale_theta);
}

double gamma_pdf(double x, const GammaParams& p) {
  check_gamma_params(p);
  if (x <= 0.0) return 0.0;
  const double z = x / p.scale_theta;
  return std::exp((p.shape_k - 1.0) * std::log(z) - z -
                  std::lgamma(p.shape_k)) /
         p.scale_theta;
}

namespace {

// Bracketed Newton on a monotone function f with derivative df, starting from
// x0 inside (lo, hi). Bisects whenever a Newton step leaves the bracket.
template <typename F, typename DF>
double bracketed_newton(F f, DF df, double x0, double lo, double hi) {
  double x = std::min(std::max(x0, lo), hi);
  for (int i = 0; i < 200; ++i) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if (fx > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    const double d = df(x);
    double next = d != 0.0 ? x - fx / d : x;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - x) <= 1e-15 * (std::fabs(x) + 1e-300)) return next;
    x = next;
  }
  return x;
}

// Wilson-Hilferty starting point for the Gamma(a, 1) quantile.
double gamma_quantile_guess(double a, double z_normal) {
  const double g = 1.0 - 1.0 / (9.0 * a) + z_normal / (3.0 * std::sqrt(a));
  const double x = a * g * g * g;
  return x > 0.0 ? x : 1e-8;
}

double gamma_quantile_unit(double a, double t) {
  // Solve P(a, x) = t for the unit-scale gamma.
  double x0 = gamma_quantile_guess(a, std_normal_quantile(t));
  if (regularized_gamma_p(a, x0) < 1e-290 && t < 1e-290) {
    // Deep lower tail: invert the leading term P ~ x^a / Gamma(a+1).
    x0 = std::exp((std::log(t) + std::lgamma(a + 1.0)) / a);
  }
  double lo = 0.0;
  double hi = std::max(x0 * 2.0, a + 10.0);
  while (regularized_gamma_p(a, hi) < t) {
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  return bracketed_newton(
      [&](double x) { return regularized_gamma_p(a, x) - t; },
      [&](double x) {
        return std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
      },
      x0, lo, hi);
}

double gamma_quantile_upper_unit(double a, double u) {
  // Solve Q(a, x) = u; Q is decreasing, so negate for the Newton helper.
  double x0 = gamma_quantile_guess(a, std_normal_quantile_upper(u));
  double lo = 0.0;
  double hi = std::max(x0 * 2.0, a + 10.0);
  while (regularized_gamma_q(a, hi) > u) {
    hi *= 2.0;
    if (hi > 1e300) break;
  }
  return bracketed_newton(
      [&](double x) { return u - regularized_gamma_q(a, x); },
      [&](double x) {
        return std::exp((a - 1.0) * std::log(x) - x - std::lgamma(a));
      },
      x0, lo, hi);
}

}  // namespace

double gamma_quantile(double t, const GammaParams& p) {
  check_gamma_params(p);
  check_probability_open(t, "quantile level");
  if (t > 0.5) return p.scale_theta * gamma_quantile_upper_unit(p.shape_k, 1.0 - t);
  return p.scale_theta * gamma_quantile_unit(p.shape_k, t);
}

double gamma_quantile_upper(double u, const GammaParams& p) {
  check_gamma_params(p);
  check_probability_open(u, "upper quantile level");
  if (u > 0.5) return p.scale_theta * gamma_quantile_unit(p.shape_k, 1.0 - u);
  return p.scale_theta * gamma_quantile_upper_unit(p.shape_k, u);
}

// ---------------------------------------------------------------------------
// Empirical
// ---------------------------------------------------------------------------

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values)
    : sorted_(std::move(values)) {
  if (sorted_.empty()) {
    throw EmptySampleError("empirical distribution needs at least one value");
  }
  for (double v : sorted_) {
    if (!std::isfinite(v)) {
      throw DomainError("empirical distribution given a non-finite value");
    }
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) /
         static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::sf(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(sorted_.end() - it) /
         static_cast<double>(sorted_.size());
}

double EmpiricalDistribution::quantile(double t) const {
  check_probability_open(t, "quantile level");
  const double n = static_cast<double>(sorted_.size());
  auto k = static_cast<std::size_t>(std::ceil(t * n));
  k = std::min(std::max<std::size_t>(k, 1), sorted_.size());
  return sorted_[k - 1];
}

double EmpiricalDistribution::quantile_upper(double u) const {
  check_probability_open(u, "upper quantile level");
  const double n = static_cast<double>(sorted_.size());
  // Number of values allowed above the result: floor(u * n).
  auto above = static_cast<std::size_t>(std::floor(u * n));
  above = std::min(above, sorted_.size() - 1);
  return sorted_[sorted_.size() - 1 - above];
}

double ecdf_eval(const EmpiricalDistribution& d, double x) { return d.cdf(x); }

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

NormalParams fit_normal(std::span<const double> samples) {
  if (samples.size() < 2) {
    throw DegenerateSampleError("normal fit needs at least two samples");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double mu = mean(sorted);
  std::vector<double> sq(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double d = sorted[i] - mu;
    sq[i] = d * d;
  }
  const double var = mean(sq);
  if (!(var > 0.0)) {
    throw DegenerateSampleError("sample variance is zero");
  }
  return NormalParams{mu, std::sqrt(var)};
}

// ---------------------------------------------------------------------------
// Gaussian mixture
// ---------------------------------------------------------------------------

namespace {

void check_gmm_params(const GmmParams& p) {
  if (p.components.empty()) throw DomainError("mixture has no components");
  double wsum = 0.0;
  for (const auto& c : p.components) {
    if (!(c.weight > 0.0) || !(c.sigma > 0.0)) {
      throw DomainError("mixture weights and sigmas must be positive");
    }
    wsum += c.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-9) {
    throw DomainError("mixture weights must sum to 1");
  }
}

struct EmRun {
  GmmParams params;
  GmmFitInfo info;
};

EmRun run_em(const std::vector<double>& xs, int k, Rng& rng, bool jitter) {
  const std::size_t n = xs.size();
  const double sample_mu = mean(xs);
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = xs[i] - sample_mu;
    sq[i] = d * d;
  }
  const double sample_sigma = std::sqrt(mean(sq));
  if (!(sample_sigma > 0.0)) {
    throw DegenerateSampleError("sample variance is zero");
  }

  // Components seeded at equally spaced sample quantiles.
  std::vector<double> sorted(xs);
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> w(k, 1.0 / k), mu(k), var(k);
  for (int j = 0; j < k; ++j) {
    const double level = (j + 0.5) / k;
    mu[j] = sorted[static_cast<std::size_t>(level * (n - 1))];
    if (jitter) mu[j] += sample_sigma * 0.25 * rng.normal();
    const double s0 = sample_sigma / k;
    var[j] = s0 * s0;
  }

  EmRun run;
  run.info.variance_floored = false;
  std::vector<double> log_w(k), log_sigma(k);
  std::vector<double> resp(static_cast<std::size_t>(k));
  std::vector<double> nj(k), sum_x(k), sum_xx(k);
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < kEmMaxIterations; ++iter) {
    for (int j = 0; j < k; ++j) {
      log_w[j] = std::log(w[j]);
      log_sigma[j] = 0.5 * std::log(var[j]);
    }
    std::fill(nj.begin(), nj.end(), 0.0);
    std::fill(sum_x.begin(), sum_x.end(), 0.0);
    std::fill(sum_xx.begin(), sum_xx.end(), 0.0);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double max_lp = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k; ++j) {
        const double z = (xs[i] - mu[j]);
        const double lp =
            log_w[j] - 0.5 * z * z / var[j] - log_sigma[j] - kLogSqrt2Pi;
        resp[j] = lp;
        max_lp = std::max(max_lp, lp);
      }
      double denom = 0.0;
      for (int j = 0; j < k; ++j) denom += std::exp(resp[j] - max_lp);
      ll += max_lp + std::log(denom);
      for (int j = 0; j < k; ++j) {
        const double r = std::exp(resp[j] - max_lp) / denom;
        nj[j] += r;
        sum_x[j] += r * xs[i];
        sum_xx[j] += r * xs[i] * xs[i];
      }
    }
    run.info.log_likelihood_path.push_back(ll);
    run.info.iterations = iter + 1;
    if (std::fabs(ll - prev_ll) < kEmLogLikTol) {
      run.info.converged = true;
      break;
    }
    prev_ll = ll;
    for (int j = 0; j < k; ++j) {
      if (!(nj[j] > 0.0)) {
        throw DegenerateSampleError("mixture component lost all support");
      }
      w[j] = nj[j] / static_cast<double>(n);
      mu[j] = sum_x[j] / nj[j];
      double v = sum_xx[j] / nj[j] - mu[j] * mu[j];
      if (v < kEmVarianceFloor) {
        v = kEmVarianceFloor;
        run.info.variance_floored = true;
      }
      var[j] = v;
    }
  }
  run.info.log_likelihood = run.info.log_likelihood_path.back();

  run.params.components.resize(k);
  for (int j = 0; j < k; ++j) {
    run.params.components[j] = GmmComponent{w[j], mu[j], std::sqrt(var[j])};
  }
  std::sort(run.params.components.begin(), run.params.components.end(),
            [](const GmmComponent& a, const GmmComponent& b) {
              return a.mu < b.mu;
            });
  run.params.variance_floored = run.info.variance_floored;
  for (const auto& c : run.params.components) {
    if (!(c.sigma >= 1e-9)) {
      throw DegenerateSampleError("mixture component sigma collapsed");
    }
  }
  return run;
}

}  // namespace

GmmParams fit_gmm_1d(std::span<const double> samples, int n_components,
                     std::uint64_t seed, GmmFitInfo* info) {
  if (n_components < 1 || n_components > 20) {
    throw DomainError("n_components must be between 1 and 20");
  }
  if (samples.size() < 10 * static_cast<std::size_t>(n_components)) {
    throw DegenerateSampleError(
        "need at least 10 samples per mixture component");
  }
  std::vector<double> xs(samples.begin(), samples.end());

  EmRun best;
  bool have_best = false;
  for (int restart = 0; restart < kEmRestarts; ++restart) {
    Rng rng(derive_seed(seed, {0x6d6d67ULL, static_cast<std::uint64_t>(restart)}));
    EmRun run = run_em(xs, n_components, rng, restart > 0);
    if (!have_best || run.info.log_likelihood > best.info.log_likelihood) {
      run.info.best_restart = restart;
      best = std::move(run);
      have_best = true;
    }
  }
  if (info) *info = best.info;
  return best.params;
}

double gmm_cdf(double x, const GmmParams& p) {
  check_gmm_params(p);
  double acc = 0.0;
  for (const auto& c : p.components) {
    acc += c.weight * std_normal_cdf((x - c.mu) / c.sigma);
  }
  return std::min(acc, 1.0);
}

double gmm_sf(double x, const GmmParams& p) {
  check_gmm_params(p);
  double acc = 0.0;
  for (const auto& c : p.components) {
    acc += c.weight * std_normal_sf((x - c.mu) / c.sigma);
  }
  return std::min(acc, 1.0);
}

double gmm_pdf(double x, const GmmParams& p) {
  check_gmm_params(p);
  double acc = 0.0;
  for (const auto& c : p.components) {
    acc += c.weight * std_normal_pdf((x - c.mu) / c.sigma) / c.sigma;
  }
  return acc;
}

namespace {

std::pair<double, double> gmm_support_bracket(const GmmParams& p) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : p.components) {
    lo = std::min(lo, c.mu - 40.0 * c.sigma);
    hi = std::max(hi, c.mu + 40.0 * c.sigma);
  }
  return {lo, hi};
}

}  // namespace

double gmm_quantile(double t, const GmmParams& p) {
  check_gmm_params(p);
  check_probability_open(t, "quantile level");
  auto [lo, hi] = gmm_support_bracket(p);
  return bracketed_newton([&](double x) { return gmm_cdf(x, p) - t; },
                          [&](double x) { return gmm_pdf(x, p); },
                          0.5 * (lo + hi), lo, hi);
}

double gmm_quantile_upper(double u, const GmmParams& p) {
  check_gmm_params(p);
  check_probability_open(u, "upper quantile level");
  auto [lo, hi] = gmm_support_bracket(p);
  return bracketed_newton([&](double x) { return u - gmm_sf(x, p); },
                          [&](double x) { return gmm_pdf(x, p); },
                          0.5 * (lo + hi), lo, hi);
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

std::vector<double> sample_gamma(const GammaParams& p, std::size_t n,
                                 std::uint64_t seed) {
  check_gamma_params(p);
  if (n < 1) throw DomainError("sample size must be at least 1");
  Rng rng(seed);
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(rng.gamma(p.shape_k, p.scale_theta));
  }
  return out;
}

// ---------------------------------------------------------------------------
// FittedDistribution
// ---------------------------------------------------------------------------

FittedDistribution FittedDistribution::empirical(std::vector<double> values) {
  return FittedDistribution(Variant(EmpiricalDistribution(std::move(values))));
}

FittedDistribution FittedDistribution::normal(NormalParams p) {
  if (!(p.sigma > 0.0)) throw DomainError("sigma must be positive");
  return FittedDistribution(Variant(p));
}

FittedDistribution FittedDistribution::gmm(GmmParams p) {
  check_gmm_params(p);
  return FittedDistribution(Variant(std::move(p)));
}

FittedDistribution FittedDistribution::gamma(GammaParams p) {
  check_gamma_params(p);
  return FittedDistribution(Variant(p));
}

double FittedDistribution::cdf(double x) const {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalDistribution>) {
          return d.cdf(x);
        } else if constexpr (std::is_same_v<T, NormalParams>) {
          return normal_cdf(x, d);
        } else if constexpr (std::is_same_v<T, GmmParams>) {
          return gmm_cdf(x, d);
        } else {
          return gamma_cdf(x, d);
        }
      },
      dist_);
}

double FittedDistribution::sf(double x) const {
  return std::visit(
      [x](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalDistribution>) {
          return d.sf(x);
        } else if constexpr (std::is_same_v<T, NormalParams>) {
          return normal_sf(x, d);
        } else if constexpr (std::is_same_v<T, GmmParams>) {
          return gmm_sf(x, d);
        } else {
          return gamma_sf(x, d);
        }
      },
      dist_);
}

double FittedDistribution::quantile(double t) const {
  return std::visit(
      [t](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalDistribution>) {
          return d.quantile(t);
        } else if constexpr (std::is_same_v<T, NormalParams>) {
          return normal_quantile(t, d);
        } else if constexpr (std::is_same_v<T, GmmParams>) {
          return gmm_quantile(t, d);
        } else {
          return gamma_quantile(t, d);
        }
      },
      dist_);
}

double FittedDistribution::quantile_upper(double u) const {
  return std::visit(
      [u](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, EmpiricalDistribution>) {
          return d.quantile_upper(u);
        } else if constexpr (std::is_same_v<T, NormalParams>) {
          return normal_quantile_upper(u, d);
        } else if constexpr (std::is_same_v<T, GmmParams>) {
          return gmm_quantile_upper(u, d);
        } else {
          return gamma_quantile_upper(u, d);
        }
      },
      dist_);
}

bool FittedDistribution::is_continuous() const {
  return !std::holds_alternative<EmpiricalDistribution>(dist_);
}

bool FittedDistribution::same_parameters(
    const FittedDistribution& other) const {
  return dist_ == other.dist_;
}

}  // namespace epsaudit
