#include "epsaudit/goodness_of_fit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "epsaudit/distfit.hpp"
#include "epsaudit/errors.hpp"
#include "epsaudit/rng.hpp"

namespace epsaudit {

namespace {

constexpr double kAlpha = 0.05;
constexpr int kSeriesTerms = 100;
constexpr double kPi = 3.141592653589793;

}  // namespace

double kolmogorov_tail(double lambda) {
  if (lambda <= 1e-8) return 1.0;
  if (lambda < 0.755) {
    // Jacobi-transformed series converges fast for small lambda.
    double sum = 0.0;
    for (int j = 1; j <= kSeriesTerms; j += 2) {
      const double e = std::exp(-static_cast<double>(j) * j * kPi * kPi /
                                (8.0 * lambda * lambda));
      if (e == 0.0) break;
      sum += e;
    }
    const double cdf = std::sqrt(2.0 * kPi) / lambda * sum;
    return std::min(1.0, std::max(0.0, 1.0 - cdf));
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= kSeriesTerms; ++j) {
    const double term = std::exp(-2.0 * static_cast<double>(j) * j * lambda *
                                 lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) {
    throw EmptySampleError("KS test needs two non-empty samples");
  }
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t ia = 0;
  std::size_t ib = 0;
  double d = 0.0;
  while (ia < sa.size() && ib < sb.size()) {
    const double x = std::min(sa[ia], sb[ib]);
    while (ia < sa.size() && sa[ia] == x) ++ia;
    while (ib < sb.size() && sb[ib] == x) ++ib;
    d = std::max(d, std::fabs(static_cast<double>(ia) / na -
                              static_cast<double>(ib) / nb));
  }
  // Beyond the shorter sample's last point only one eCDF is short of 1.
  if (ia < sa.size()) d = std::max(d, 1.0 - static_cast<double>(ia) / na);
  if (ib < sb.size()) d = std::max(d, 1.0 - static_cast<double>(ib) / nb);

  const double ne = na * nb / (na + nb);
  const double p = kolmogorov_tail(std::sqrt(ne) * d);
  return KsResult{d, p, sa.size(), sb.size()};
}

FitQualityReport gmm_fit_quality(std::span<const double> losses,
                                 int n_components, std::size_t n_samples,
                                 std::uint64_t seed) {
  if (n_samples < 1) throw DomainError("n_samples must be at least 1");
  if (n_samples > losses.size() / 2) {
    throw InsufficientDataError(
        "hold-out size exceeds half of the loss set; cannot partition");
  }

  // Deterministic shuffle; the hold-out is the first n_samples afterwards.
  std::vector<std::size_t> order(losses.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(seed, {0x73687566ULL}));
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = shuffle_rng.next_u64() % (i + 1);
    std::swap(order[i], order[j]);
  }
  std::vector<double> holdout;
  std::vector<double> fit_set;
  holdout.reserve(n_samples);
  fit_set.reserve(losses.size() - n_samples);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_samples ? holdout : fit_set).push_back(losses[order[i]]);
  }

  const GmmParams params = fit_gmm_1d(fit_set, n_components,
                                      derive_seed(seed, {0x666974ULL}));

  // Draw n_samples from the fitted mixture.
  Rng draw_rng(derive_seed(seed, {0x64726177ULL}));
  std::vector<double> draws;
  draws.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    double u = draw_rng.uniform();
    double x = 0.0;
    for (const auto& c : params.components) {
      if (u < c.weight || &c == &params.components.back()) {
        x = c.mu + c.sigma * draw_rng.normal();
        break;
      }
      u -= c.weight;
    }
    draws.push_back(x);
  }

  FitQualityReport report;
  report.n_components = n_components;
  report.n_samples = n_samples;
  report.ks = ks_two_sample(holdout, draws);
  report.passes_alpha = report.ks.p_value > kAlpha;
  return report;
}

std::vector<FitQualityReport> gmm_fit_quality_sweep(
    std::span<const double> losses, std::span<const int> component_counts,
    std::span<const std::size_t> sample_sizes, std::uint64_t seed) {
  std::vector<FitQualityReport> reports;
  reports.reserve(component_counts.size() * sample_sizes.size());
  for (int k : component_counts) {
    for (std::size_t s : sample_sizes) {
      const std::uint64_t cell_seed = derive_seed(
          seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(s)});
      reports.push_back(gmm_fit_quality(losses, k, s, cell_seed));
    }
  }
  return reports;
}

std::string fit_quality_csv(std::span<const FitQualityReport> reports) {
  std::string out = "n_components,n_samples,d,p_value,passes\n";
  char line[160];
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%d,%zu,%.17g,%.17g,%d\n",
                  r.n_components, r.n_samples, r.ks.statistic_d, r.ks.p_value,
                  r.passes_alpha ? 1 : 0);
    out += line;
  }
  return out;
}

}  // namespace epsaudit
