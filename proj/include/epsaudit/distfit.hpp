#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace epsaudit {

// ---------------------------------------------------------------------------
// Parameter types
// ---------------------------------------------------------------------------

struct NormalParams {
  double mu = 0.0;
  double sigma = 1.0;  // strictly positive

  friend bool operator==(const NormalParams&, const NormalParams&) = default;
};

struct GmmComponent {
  double weight = 1.0;
  double mu = 0.0;
  double sigma = 1.0;

  friend bool operator==(const GmmComponent&, const GmmComponent&) = default;
};

struct GmmParams {
  std::vector<GmmComponent> components;  // weights sum to 1 within 1e-9
  bool variance_floored = false;         // some component hit the EM floor

  friend bool operator==(const GmmParams&, const GmmParams&) = default;
};

struct GammaParams {
  double shape_k = 1.0;      // > 0
  double scale_theta = 1.0;  // > 0

  friend bool operator==(const GammaParams&, const GammaParams&) = default;
};

// Sorted sample acting as a right-continuous step CDF.
class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> values);

  const std::vector<double>& sorted_values() const { return sorted_; }
  std::size_t n() const { return sorted_.size(); }

  double cdf(double x) const;  // fraction of values <= x
  double sf(double x) const;   // fraction of values > x, exact complement
  double quantile(double t) const;        // inf{x : cdf(x) >= t}
  double quantile_upper(double u) const;  // quantile(1 - u) from the top

  friend bool operator==(const EmpiricalDistribution& a,
                         const EmpiricalDistribution& b) {
    return a.sorted_ == b.sorted_;
  }

 private:
  std::vector<double> sorted_;
};

// ---------------------------------------------------------------------------
// Scalar distribution functions
// ---------------------------------------------------------------------------

// Standard normal CDF/SF via erfc; relatively accurate deep into the tails
// (values down to ~1e-300 keep close to full double precision).
double std_normal_cdf(double z);
double std_normal_sf(double z);
double std_normal_pdf(double z);

// Inverse standard normal: rational initial approximation refined by Newton
// steps against the erfc-based CDF.
double std_normal_quantile(double t);        // cdf(result) = t
double std_normal_quantile_upper(double u);  // sf(result) = u

double normal_cdf(double x, const NormalParams& p);
double normal_sf(double x, const NormalParams& p);
double normal_pdf(double x, const NormalParams& p);
double normal_quantile(double t, const NormalParams& p);
double normal_quantile_upper(double u, const NormalParams& p);

// Regularized incomplete gamma functions: series for z < a+1, continued
// fraction otherwise, so each tail is computed in its own accurate form.
double regularized_gamma_p(double a, double z);
double regularized_gamma_q(double a, double z);

double gamma_cdf(double x, const GammaParams& p);  // 0 for x < 0
double gamma_sf(double x, const GammaParams& p);
double gamma_pdf(double x, const GammaParams& p);
double gamma_quantile(double t, const GammaParams& p);
double gamma_quantile_upper(double u, const GammaParams& p);

double gmm_cdf(double x, const GmmParams& p);
double gmm_sf(double x, const GmmParams& p);
double gmm_pdf(double x, const GmmParams& p);
double gmm_quantile(double t, const GmmParams& p);
double gmm_quantile_upper(double u, const GmmParams& p);

// ---------------------------------------------------------------------------
// Fitting and sampling
// ---------------------------------------------------------------------------

// Maximum-likelihood Normal fit (sigma divides by n, not n-1). Summation runs
// over a sorted copy so the result does not depend on sample order.
NormalParams fit_normal(std::span<const double> samples);

// Fraction of sorted values <= x.
double ecdf_eval(const EmpiricalDistribution& d, double x);

struct GmmFitInfo {
  std::vector<double> log_likelihood_path;  // one entry per EM iteration
  int iterations = 0;
  bool converged = false;
  bool variance_floored = false;
  double log_likelihood = 0.0;
  int best_restart = 0;
};

// 1-D Gaussian mixture via EM: quantile-spread initialization, 5 seeded
// restarts keeping the best likelihood, variance floor 1e-9, convergence on
// |delta log-likelihood| < 1e-8 or 500 iterations. Components come back
// sorted by mean.
GmmParams fit_gmm_1d(std::span<const double> samples, int n_components,
                     std::uint64_t seed, GmmFitInfo* info = nullptr);

// n i.i.d. Gamma draws; identical sequence for identical seeds.
std::vector<double> sample_gamma(const GammaParams& p, std::size_t n,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Tagged union over the four families
// ---------------------------------------------------------------------------

class FittedDistribution {
 public:
  static FittedDistribution empirical(std::vector<double> values);
  static FittedDistribution normal(NormalParams p);
  static FittedDistribution gmm(GmmParams p);
  static FittedDistribution gamma(GammaParams p);

  double cdf(double x) const;
  double sf(double x) const;
  double quantile(double t) const;
  double quantile_upper(double u) const;

  bool is_continuous() const;  // everything except the empirical family

  // True when both sides hold the same family with bit-identical parameters;
  // the rate curve of such a pair is exactly eta = 1 - t.
  bool same_parameters(const FittedDistribution& other) const;

 private:
  using Variant = std::variant<EmpiricalDistribution, NormalParams, GmmParams,
                               GammaParams>;
  explicit FittedDistribution(Variant d) : dist_(std::move(d)) {}
  Variant dist_;
};

}  // namespace epsaudit
