#include "fedsoft/models.hpp"

#include <algorithm>
#include <cmath>

namespace fedsoft {

static void check_dims(const LossModel& m, const ModelVector& w, const LabeledPoint& p) {
  if (static_cast<int>(w.size()) != m.param_dim())
    throw ContractViolation("parameter dimension mismatch");
  if (static_cast<int>(p.x.size()) != m.input_dim)
    throw ContractViolation("feature dimension mismatch");
}

static int class_label(const LossModel& m, const LabeledPoint& p) {
  const int label = static_cast<int>(std::lround(p.y));
  if (label < 0 || label >= m.class_count)
    throw ContractViolation("class label outside model range");
  return label;
}

// logits_c = <w_c, x> with w row-major; returns log-sum-exp and fills logits.
static double logits_and_lse(const LossModel& m, const ModelVector& w, const LabeledPoint& p,
                             std::vector<double>& logits) {
  logits.assign(m.class_count, 0.0);
  for (int c = 0; c < m.class_count; ++c) {
    const double* row = w.data() + static_cast<size_t>(c) * m.input_dim;
    double s = 0.0;
    for (int i = 0; i < m.input_dim; ++i) s += row[i] * p.x[i];
    logits[c] = s;
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double acc = 0.0;
  for (double l : logits) acc += std::exp(l - mx);
  return mx + std::log(acc);
}

double point_loss(const LossModel& m, const ModelVector& w, const LabeledPoint& p) {
  check_dims(m, w, p);
  if (m.kind == LossModel::Kind::LinearRegression) {
    const double r = vec::dot(w, p.x) - p.y;
    return r * r;
  }
  std::vector<double> logits;
  const double lse = logits_and_lse(m, w, p, logits);
  return lse - logits[class_label(m, p)];
}

static void add_point_gradient(const LossModel& m, const ModelVector& w, const LabeledPoint& p,
                               double scale, ModelVector& out) {
  if (m.kind == LossModel::Kind::LinearRegression) {
    const double r = vec::dot(w, p.x) - p.y;
    const double f = scale * 2.0 * r;
    for (int i = 0; i < m.input_dim; ++i) out[i] += f * p.x[i];
    return;
  }
  std::vector<double> logits;
  const double lse = logits_and_lse(m, w, p, logits);
  const int label = class_label(m, p);
  for (int c = 0; c < m.class_count; ++c) {
    const double prob = std::exp(logits[c] - lse);
    const double f = scale * (prob - (c == label ? 1.0 : 0.0));
    double* row = out.data() + static_cast<size_t>(c) * m.input_dim;
    for (int i = 0; i < m.input_dim; ++i) row[i] += f * p.x[i];
  }
}

ModelVector point_gradient(const LossModel& m, const ModelVector& w, const LabeledPoint& p) {
  check_dims(m, w, p);
  ModelVector g(m.param_dim(), 0.0);
  add_point_gradient(m, w, p, 1.0, g);
  return g;
}

double batch_risk(const LossModel& m, const ModelVector& w, std::span<const LabeledPoint> pts) {
  if (pts.empty()) throw ContractViolation("batch_risk over an empty point list");
  double s = 0.0;
  for (const auto& p : pts) s += point_loss(m, w, p);
  return s / static_cast<double>(pts.size());
}

ModelVector batch_gradient(const LossModel& m, const ModelVector& w,
                           std::span<const LabeledPoint> pts) {
  if (pts.empty()) throw ContractViolation("batch_gradient over an empty point list");
  ModelVector g(m.param_dim(), 0.0);
  const double scale = 1.0 / static_cast<double>(pts.size());
  for (const auto& p : pts) {
    check_dims(m, w, p);
    add_point_gradient(m, w, p, scale, g);
  }
  return g;
}

ModelVector batch_gradient_indices(const LossModel& m, const ModelVector& w,
                                   const std::vector<LabeledPoint>& shard,
                                   std::span<const int> idx) {
  if (idx.empty()) throw ContractViolation("batch_gradient over an empty index list");
  ModelVector g(m.param_dim(), 0.0);
  const double scale = 1.0 / static_cast<double>(idx.size());
  for (int i : idx) add_point_gradient(m, w, shard[static_cast<size_t>(i)], scale, g);
  return g;
}

double weighted_risk(const LossModel& m, const ModelVector& w, std::span<const LabeledPoint> pts,
                     std::span<const double> weights) {
  if (pts.size() != weights.size()) throw ContractViolation("weight/point count mismatch");
  double total = 0.0, mass = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    total += weights[i] * point_loss(m, w, pts[i]);
    mass += weights[i];
  }
  if (mass <= 0.0) throw ContractViolation("weighted_risk with zero total weight");
  return total / mass;
}

ModelVector weighted_gradient(const LossModel& m, const ModelVector& w,
                              std::span<const LabeledPoint> pts, std::span<const double> weights) {
  if (pts.size() != weights.size()) throw ContractViolation("weight/point count mismatch");
  double mass = 0.0;
  for (double x : weights) mass += x;
  if (mass <= 0.0) throw ContractViolation("weighted_gradient with zero total weight");
  ModelVector g(m.param_dim(), 0.0);
  for (size_t i = 0; i < pts.size(); ++i) {
    check_dims(m, w, pts[i]);
    add_point_gradient(m, w, pts[i], weights[i] / mass, g);
  }
  return g;
}

int predicted_class(const LossModel& m, const ModelVector& w, const LabeledPoint& p) {
  if (m.kind != LossModel::Kind::MultinomialLogistic)
    throw ContractViolation("predicted_class requires the logistic model");
  check_dims(m, w, p);
  std::vector<double> logits;
  logits_and_lse(m, w, p, logits);
  return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

}  // namespace fedsoft
