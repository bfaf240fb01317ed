#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace epsaudit {

struct KsResult {
  double statistic_d = 0.0;
  double p_value = 1.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
};

// Survival function of the asymptotic Kolmogorov distribution,
// Q(lambda) = 2 sum_j (-1)^{j-1} exp(-2 j^2 lambda^2), series capped at 100
// terms with the theta-transformed form used for small lambda.
double kolmogorov_tail(double lambda);

// Exact two-sample KS statistic by a merged sweep (ties advance both step
// counts before the difference is taken); asymptotic p-value with effective
// n = n_a n_b / (n_a + n_b).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct FitQualityReport {
  int n_components = 1;
  std::size_t n_samples = 0;
  KsResult ks;
  bool passes_alpha = false;  // p_value > 0.05
};

// Appendix-style fit-quality probe: hold out n_samples (seeded shuffle), fit
// a GMM to the rest, draw n_samples from the fit, and KS-compare the held-out
// losses against the draws.
FitQualityReport gmm_fit_quality(std::span<const double> losses,
                                 int n_components, std::size_t n_samples,
                                 std::uint64_t seed);

// Sweep over component counts and hold-out sizes with per-cell derived seeds.
std::vector<FitQualityReport> gmm_fit_quality_sweep(
    std::span<const double> losses, std::span<const int> component_counts,
    std::span<const std::size_t> sample_sizes, std::uint64_t seed);

// CSV with columns: n_components,n_samples,d,p_value,passes
std::string fit_quality_csv(std::span<const FitQualityReport> reports);

}  // namespace epsaudit
