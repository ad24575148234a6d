#pragma once

#include <span>

#include "fedsoft/types.hpp"

namespace fedsoft {

// Pluggable per-point loss with analytic gradients. The logistic model's
// parameter vector is its class-by-feature weight matrix flattened row-major.
struct LossModel {
  enum class Kind { LinearRegression, MultinomialLogistic };
  Kind kind = Kind::LinearRegression;
  int input_dim = 0;
  int class_count = 1;

  int param_dim() const {
    return kind == Kind::LinearRegression ? input_dim : input_dim * class_count;
  }
  static LossModel linear_regression(int d) { return {Kind::LinearRegression, d, 1}; }
  static LossModel multinomial_logistic(int d, int classes) {
    return {Kind::MultinomialLogistic, d, classes};
  }
};

double point_loss(const LossModel&, const ModelVector& w, const LabeledPoint&);
ModelVector point_gradient(const LossModel&, const ModelVector& w, const LabeledPoint&);

double batch_risk(const LossModel&, const ModelVector& w, std::span<const LabeledPoint>);
ModelVector batch_gradient(const LossModel&, const ModelVector& w, std::span<const LabeledPoint>);

// Mean gradient over an index subset of a shard (mini-batch solvers).
ModelVector batch_gradient_indices(const LossModel&, const ModelVector& w,
                                   const std::vector<LabeledPoint>& shard,
                                   std::span<const int> idx);

// Per-point weighted mean risk/gradient (responsibility-weighted updates).
double weighted_risk(const LossModel&, const ModelVector& w, std::span<const LabeledPoint>,
                     std::span<const double> weights);
ModelVector weighted_gradient(const LossModel&, const ModelVector& w,
                              std::span<const LabeledPoint>, std::span<const double> weights);

int predicted_class(const LossModel&, const ModelVector& w, const LabeledPoint&);

}  // namespace fedsoft
