#include "fedsoft/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace fedsoft {

std::vector<std::vector<double>> holdout_matrix(
    const CenterSet& centers, const std::vector<std::vector<LabeledPoint>>& holdouts,
    const LossModel& model) {
  if (holdouts.empty()) throw ContractViolation("holdout matrix over an empty holdout list");
  std::vector<std::vector<double>> m(holdouts.size(), std::vector<double>(centers.size(), 0.0));
  for (size_t i = 0; i < holdouts.size(); ++i)
    for (size_t s = 0; s < centers.size(); ++s)
      m[i][s] = batch_risk(model, centers[s], holdouts[i]);
  return m;
}

Association association(const std::vector<std::vector<double>>& matrix) {
  Association out;
  out.best_center.reserve(matrix.size());
  for (const auto& row : matrix) {
    size_t best = 0;
    for (size_t s = 1; s < row.size(); ++s)
      if (row[s] < row[best]) best = s;
    out.best_center.push_back(static_cast<int>(best));
  }
  const std::set<int> uniq(out.best_center.begin(), out.best_center.end());
  out.distinct = uniq.size() == out.best_center.size();
  return out;
}

double importance_error(const std::vector<ClientState>& clients,
                        const std::vector<std::vector<double>>& true_mixture) {
  if (clients.empty()) throw ContractViolation("importance error over an empty client list");
  double total = 0.0;
  for (size_t k = 0; k < clients.size(); ++k) {
    const auto& est = clients[k].importance;
    const auto& truth = true_mixture[k];
    if (est.size() != truth.size())
      throw ContractViolation("importance estimate length does not match the mixture");
    for (size_t s = 0; s < est.size(); ++s) total += std::fabs(est[s] - truth[s]);
  }
  return total / static_cast<double>(clients.size());
}

double aligned_importance_error(const std::vector<ClientState>& clients,
                                const std::vector<std::vector<double>>& true_mixture,
                                const Association& assoc) {
  if (clients.empty()) throw ContractViolation("importance error over an empty client list");
  const size_t S = clients.front().importance.size();
  std::vector<int> mapping(S);
  for (size_t s = 0; s < S; ++s) mapping[s] = static_cast<int>(s);
  if (assoc.distinct && assoc.best_center.size() == S)
    mapping = assoc.best_center;  // distribution i is served by center mapping[i]
  double total = 0.0;
  for (size_t k = 0; k < clients.size(); ++k)
    for (size_t i = 0; i < S; ++i)
      total += std::fabs(clients[k].importance[static_cast<size_t>(mapping[i])] -
                         true_mixture[k][i]);
  return total / static_cast<double>(clients.size());
}

std::pair<double, double> cluster_divergence(const std::vector<ModelVector>& vs) {
  if (vs.size() < 2)
    throw ContractViolation("cluster divergence is undefined for fewer than two vectors");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (size_t i = 0; i < vs.size(); ++i)
    for (size_t j = i + 1; j < vs.size(); ++j) {
      const double d = std::sqrt(vec::squared_distance(vs[i], vs[j]));
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  return {lo, hi};
}

double joint_objective(const std::vector<ClientState>& clients, const CenterSet& centers,
                       const std::vector<std::vector<double>>& fixed_weights, double prox_weight,
                       const LossModel& model) {
  double total = 0.0;
  for (size_t k = 0; k < clients.size(); ++k) {
    total += batch_risk(model, clients[k].local_model, clients[k].shard);
    for (size_t s = 0; s < centers.size(); ++s)
      total += 0.5 * prox_weight * fixed_weights[k][s] *
               vec::squared_distance(clients[k].local_model, centers[s]);
  }
  return total;
}

double mean_local_loss(const std::vector<ClientState>& clients, const LossModel& model) {
  if (clients.empty()) throw ContractViolation("mean local loss over an empty client list");
  double total = 0.0;
  for (const auto& c : clients) total += batch_risk(model, c.local_model, c.shard);
  return total / static_cast<double>(clients.size());
}

double mean_local_loss(const std::vector<ClientState>& clients,
                       const std::vector<ModelVector>& locals, const LossModel& model) {
  if (clients.empty()) throw ContractViolation("mean local loss over an empty client list");
  double total = 0.0;
  for (size_t k = 0; k < clients.size(); ++k)
    total += batch_risk(model, locals[k], clients[k].shard);
  return total / static_cast<double>(clients.size());
}

double accuracy(const LossModel& model, const ModelVector& w, std::span<const LabeledPoint> pts) {
  if (pts.empty()) throw ContractViolation("accuracy over an empty point list");
  int hits = 0;
  for (const auto& p : pts)
    if (predicted_class(model, w, p) == static_cast<int>(std::lround(p.y))) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pts.size());
}

std::vector<std::vector<double>> accuracy_matrix(
    const CenterSet& centers, const std::vector<std::vector<LabeledPoint>>& holdouts,
    const LossModel& model) {
  std::vector<std::vector<double>> m(holdouts.size(), std::vector<double>(centers.size(), 0.0));
  for (size_t i = 0; i < holdouts.size(); ++i)
    for (size_t s = 0; s < centers.size(); ++s) m[i][s] = accuracy(model, centers[s], holdouts[i]);
  return m;
}

}  // namespace fedsoft
