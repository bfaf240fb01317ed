#include "epsaudit/mechanism_audit.hpp"

#include <cmath>

#include "epsaudit/errors.hpp"
#include "epsaudit/numerics.hpp"

namespace epsaudit {

void EnsembleRates::validate() const {
  if (per_model_fnr.empty()) {
    throw EmptyEnsembleError("ensemble has no model rows");
  }
  if (t_grid.empty()) throw DomainError("ensemble t_grid is empty");
  double prev = 0.0;
  for (double t : t_grid) {
    if (!(t > 0.0 && t < 1.0)) throw DomainError("grid level outside (0,1)");
    if (!(t > prev)) throw DomainError("grid levels must strictly increase");
    prev = t;
  }
  for (const auto& row : per_model_fnr) {
    if (row.size() != t_grid.size()) {
      throw ShapeError("FNR row length does not match the t_grid");
    }
    for (double eta : row) {
      if (!(eta >= 0.0 && eta <= 1.0)) {
        throw DomainError("FNR outside [0, 1]");
      }
    }
  }
}

std::vector<double> EnsembleRates::mean_fnr() const {
  validate();
  const std::size_t cols = t_grid.size();
  const std::size_t rows = per_model_fnr.size();
  std::vector<double> column(rows);
  std::vector<double> means(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = 0; i < rows; ++i) column[i] = per_model_fnr[i][j];
    means[j] = pairwise_sum(column) / static_cast<double>(rows);
  }
  return means;
}

double epsilon_bar(const EnsembleRates& ensemble, double delta) {
  const std::vector<double> means = ensemble.mean_fnr();
  RateCurve curve;
  curve.source = CurveSource::oracle;
  curve.pairs.reserve(means.size());
  for (std::size_t j = 0; j < means.size(); ++j) {
    curve.pairs.push_back(RatePair{ensemble.t_grid[j], means[j]});
  }
  return epsilon_star_discrete(curve, delta).epsilon_star;
}

JensenCheck jensen_check(std::span<const double> per_model_eps,
                         double eps_bar) {
  if (per_model_eps.empty()) {
    throw EmptyEnsembleError("per-model epsilon* list is empty");
  }
  const double bound = log_mean_exp(per_model_eps);
  return JensenCheck{bound, eps_bar <= bound + 1e-9};
}

MechanismReport audit_mechanism(const EnsembleRates& ensemble, double delta) {
  MechanismReport report;
  report.delta = delta;
  report.epsilon_bar = epsilon_bar(ensemble, delta);
  report.per_model_eps.reserve(ensemble.per_model_fnr.size());
  for (const auto& row : ensemble.per_model_fnr) {
    RateCurve curve;
    curve.source = CurveSource::oracle;
    curve.pairs.reserve(row.size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      curve.pairs.push_back(RatePair{ensemble.t_grid[j], row[j]});
    }
    report.per_model_eps.push_back(
        epsilon_star_discrete(curve, delta).epsilon_star);
  }
  const JensenCheck jc = jensen_check(report.per_model_eps, report.epsilon_bar);
  report.jensen_bound = jc.bound;
  report.jensen_holds = jc.holds;
  return report;
}

}  // namespace epsaudit
