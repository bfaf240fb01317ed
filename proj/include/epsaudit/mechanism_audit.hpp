#pragma once

#include <span>
#include <vector>

#include "epsaudit/epsilon_core.hpp"

namespace epsaudit {

// FNR curves for an ensemble of model instances, all sampled on one shared
// FPR grid. "Model instance" here means one pair of loss files; the toolkit
// never trains anything.
struct EnsembleRates {
  std::vector<double> t_grid;
  std::vector<std::vector<double>> per_model_fnr;  // rows = instances

  void validate() const;
  // Column means, pairwise-summed per column for a deterministic reduction.
  std::vector<double> mean_fnr() const;
};

// Mechanism-level lower bound: the discrete epsilon* formula applied to
// (t_i, mean-over-instances FNR_i).
double epsilon_bar(const EnsembleRates& ensemble, double delta);

struct JensenCheck {
  double bound = 0.0;  // log mean exp of the per-instance epsilon* values
  bool holds = false;  // eps_bar <= bound + 1e-9
};

JensenCheck jensen_check(std::span<const double> per_model_eps,
                         double eps_bar);

struct MechanismReport {
  double epsilon_bar = 0.0;
  double delta = 0.0;
  std::vector<double> per_model_eps;
  double jensen_bound = 0.0;
  bool jensen_holds = false;
};

// epsilon_bar plus per-instance epsilon* on the same grid and the Jensen
// relation between them.
MechanismReport audit_mechanism(const EnsembleRates& ensemble, double delta);

}  // namespace epsaudit
