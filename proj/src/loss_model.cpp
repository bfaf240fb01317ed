#include "epsaudit/loss_model.hpp"

#include <algorithm>
#include <cmath>

#include "epsaudit/errors.hpp"

namespace epsaudit {

namespace {

void check_probability_component(double f) {
  if (!(f > 0.0 && f < 1.0)) {
    throw DomainError(
        "prediction component outside (0,1); clip saturated model outputs "
        "upstream or enable prediction clipping");
  }
}

double logit(double p) { return std::log(p) - std::log(1.0 - p); }

}  // namespace

void LossSet::validate() const {
  if (values.empty()) throw EmptySampleError("loss set is empty");
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw DomainError("loss set contains a non-finite value");
    }
  }
}

PredictionRecord clip_prediction(PredictionRecord record, bool enabled,
                                 double eps) {
  if (!enabled) return record;
  for (double& f : record.prediction) {
    f = std::min(std::max(f, eps), 1.0 - eps);
  }
  return record;
}

double binary_loss(const PredictionRecord& record) {
  if (record.prediction.size() != 1 || record.label.size() != 1) {
    throw ShapeError("binary loss expects one prediction and one label");
  }
  const double f = record.prediction[0];
  const int y = record.label[0];
  if (y != 0 && y != 1) throw DomainError("binary label must be 0 or 1");
  check_probability_component(f);
  return (1.0 - 2.0 * y) * logit(f);
}

double multiclass_loss(const PredictionRecord& record) {
  if (record.label.size() != record.prediction.size()) {
    throw ShapeError("label length does not match prediction length");
  }
  int hot = 0;
  for (int y : record.label) {
    if (y != 0 && y != 1) throw DomainError("one-hot label components must be 0 or 1");
    hot += y;
  }
  if (hot != 1) throw ShapeError("label must have exactly one hot component");
  double loss = 0.0;
  for (std::size_t j = 0; j < record.prediction.size(); ++j) {
    check_probability_component(record.prediction[j]);
    if (record.label[j] == 1) loss -= logit(record.prediction[j]);
  }
  return loss;
}

std::vector<double> transform_with_bounds(const std::vector<double>& values,
                                          double norm_min, double norm_max,
                                          double alpha) {
  if (!(norm_min < norm_max)) {
    throw DegenerateLossesError("normalization bounds have zero width");
  }
  const double width = norm_max - norm_min;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    const double normalized = (v - norm_min) / width;
    const double p = std::exp(-(normalized + alpha));
    if (!(p > 0.0 && p < 1.0)) {
      throw DomainError("transformed probability left (0,1); "
                        "value too far outside the frozen bounds");
    }
    out.push_back(logit(p));
  }
  return out;
}

std::pair<TransformedLossSet, TransformedLossSet> transform_losses(
    const LossSet& train, const LossSet& pop, double alpha) {
  train.validate();
  pop.validate();
  const auto [tr_min, tr_max] =
      std::minmax_element(train.values.begin(), train.values.end());
  const auto [pp_min, pp_max] =
      std::minmax_element(pop.values.begin(), pop.values.end());
  const double lo = std::min(*tr_min, *pp_min);
  const double hi = std::max(*tr_max, *pp_max);
  if (!(lo < hi)) {
    throw DegenerateLossesError("all losses identical; no distribution to fit");
  }
  TransformedLossSet t{transform_with_bounds(train.values, lo, hi, alpha), lo,
                       hi, alpha};
  TransformedLossSet p{transform_with_bounds(pop.values, lo, hi, alpha), lo,
                       hi, alpha};
  return {std::move(t), std::move(p)};
}

}  // namespace epsaudit
