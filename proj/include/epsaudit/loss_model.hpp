#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace epsaudit {

// One model prediction with its ground-truth label.
//
// Binary models use a single probability and label {0, 1}. Multi-class models
// use a probability vector and a one-hot label of the same length.
struct PredictionRecord {
  std::vector<double> prediction;  // each component strictly inside (0, 1)
  std::vector<int> label;          // {y} for binary, one-hot for multi-class
};

enum class LossRole { training, population };

// A labeled collection of per-record scalar losses.
struct LossSet {
  std::vector<double> values;
  LossRole role = LossRole::training;
  std::string source_id;

  // Throws on empty or non-finite values.
  void validate() const;
};

// Losses after the normalize -> shift -> exp(-) -> logit pipeline, together
// with the normalization bounds so held-out losses can be mapped consistently.
struct TransformedLossSet {
  std::vector<double> values;  // logit units
  double norm_min = 0.0;
  double norm_max = 0.0;
  double shift_alpha = 1.0;
};

// Clamps prediction components that sit exactly on 0 or 1 into the open unit
// interval. Saturated model outputs are common in practice; pass
// enabled=false to surface them as DomainError downstream instead.
PredictionRecord clip_prediction(PredictionRecord record, bool enabled = true,
                                 double eps = 1e-12);

// l = (1-2y) * (log f - log(1-f)). Lower for confident, correct predictions.
double binary_loss(const PredictionRecord& record);

// l = -sum_j (log f_j - log(1-f_j)) over the hot label components.
double multiclass_loss(const PredictionRecord& record);

// The four-step loss transform: normalize to [0,1] over the union of both
// sets, shift by alpha, p = exp(-shifted), phi = log p - log(1-p). The
// composition is strictly decreasing in the raw loss. Both outputs record the
// same normalization bounds.
std::pair<TransformedLossSet, TransformedLossSet> transform_losses(
    const LossSet& train, const LossSet& pop, double alpha = 1.0);

// Applies the transform to new values using previously frozen bounds.
// Values outside [norm_min, norm_max] are allowed; they map outside [0,1]
// before the shift, which stays well-defined for alpha >= 0.
std::vector<double> transform_with_bounds(const std::vector<double>& values,
                                          double norm_min, double norm_max,
                                          double alpha);

}  // namespace epsaudit
