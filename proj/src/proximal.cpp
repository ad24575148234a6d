#include "fedsoft/proximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "fedsoft/linalg.hpp"
#include "fedsoft/rng.hpp"

namespace fedsoft {

void ProximalProblem::check() const {
  if (!shard || !centers) throw ContractViolation("proximal problem missing shard or centers");
  if (shard->empty()) throw ContractViolation("proximal problem over an empty shard");
  if (weights.size() != centers->size())
    throw ContractViolation("one proximal weight per center required");
  if (prox_weight < 0.0) throw ContractViolation("negative proximal weight");
  for (const auto& c : *centers)
    if (static_cast<int>(c.size()) != model.param_dim())
      throw ContractViolation("center dimension mismatch");
}

double proximal_value(const ProximalProblem& prob, const ModelVector& w) {
  prob.check();
  double value = batch_risk(prob.model, w, *prob.shard);
  for (size_t s = 0; s < prob.weights.size(); ++s)
    value += 0.5 * prob.prox_weight * prob.weights[s] * vec::squared_distance(w, (*prob.centers)[s]);
  return value;
}

ModelVector proximal_gradient(const ProximalProblem& prob, const ModelVector& w) {
  prob.check();
  ModelVector g = batch_gradient(prob.model, w, *prob.shard);
  for (size_t s = 0; s < prob.weights.size(); ++s) {
    const double f = prob.prox_weight * prob.weights[s];
    const auto& c = (*prob.centers)[s];
    for (size_t i = 0; i < g.size(); ++i) g[i] += f * (w[i] - c[i]);
  }
  return g;
}

namespace {

// Normal-equation pieces for mean squared error over `pts` with optional
// per-point weights: A = (2/W) X' diag(r) X, b = (2/W) X' diag(r) y.
void accumulate_normal_equations(const std::vector<LabeledPoint>& pts,
                                 const std::vector<double>* point_weights, int d,
                                 std::vector<double>& A, std::vector<double>& b) {
  A.assign(static_cast<size_t>(d) * d, 0.0);
  b.assign(static_cast<size_t>(d), 0.0);
  double mass = 0.0;
  for (size_t n = 0; n < pts.size(); ++n) {
    const double r = point_weights ? (*point_weights)[n] : 1.0;
    if (r == 0.0) continue;
    const auto& p = pts[n];
    mass += r;
    for (int i = 0; i < d; ++i) {
      const double rxi = r * p.x[i];
      for (int j = i; j < d; ++j) A[static_cast<size_t>(i) * d + j] += rxi * p.x[j];
      b[static_cast<size_t>(i)] += rxi * p.y;
    }
  }
  if (mass <= 0.0) throw ContractViolation("normal equations with zero total weight");
  const double scale = 2.0 / mass;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      A[static_cast<size_t>(i) * d + j] *= scale;
      A[static_cast<size_t>(j) * d + i] = A[static_cast<size_t>(i) * d + j];
    }
  for (auto& v : b) v *= scale;
}

ModelVector solve_quadratic(const std::vector<double>& A, const std::vector<double>& b, int d) {
  ModelVector w;
  if (!linalg::cholesky_solve(A, b, w))
    throw DegenerateProblemError("singular proximal system (rank-deficient features with zero "
                                 "regularization)");
  // One refinement pass keeps the stationarity residual near machine epsilon.
  auto Aw = linalg::matvec(A, w);
  std::vector<double> resid(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) resid[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] - Aw[static_cast<size_t>(i)];
  ModelVector delta;
  if (linalg::cholesky_solve(A, resid, delta)) vec::axpy(1.0, delta, w);
  return w;
}

}  // namespace

ModelVector solve_closed_form(const ProximalProblem& prob) {
  prob.check();
  if (prob.model.kind != LossModel::Kind::LinearRegression)
    throw ContractViolation("closed-form solve requires the linear-regression model");
  const int d = prob.model.input_dim;
  std::vector<double> A, b;
  accumulate_normal_equations(*prob.shard, nullptr, d, A, b);
  double weight_sum = 0.0;
  for (double u : prob.weights) weight_sum += u;
  const double ridge = prob.prox_weight * weight_sum;
  for (int i = 0; i < d; ++i) A[static_cast<size_t>(i) * d + i] += ridge;
  for (size_t s = 0; s < prob.weights.size(); ++s) {
    const double f = prob.prox_weight * prob.weights[s];
    vec::axpy(f, (*prob.centers)[s], b);
  }
  return solve_quadratic(A, b, d);
}

ModelVector solve_iterative(const ProximalProblem& prob, const ModelVector& start,
                            const SolverConfig& solver, std::mt19937_64& g) {
  prob.check();
  if (static_cast<int>(start.size()) != prob.model.param_dim())
    throw ContractViolation("start point dimension mismatch");
  ModelVector w = start;
  if (solver.local_epochs == 0) return w;

  const int n = static_cast<int>(prob.shard->size());
  const int batch = std::min(solver.batch_size, n);
  const size_t p = w.size();
  ModelVector m1(p, 0.0), m2(p, 0.0);
  long step_count = 0;
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  ModelVector last_finite = w;

  for (int epoch = 0; epoch < solver.local_epochs; ++epoch) {
    const double lr = solver.step_size / std::sqrt(1.0 + epoch);
    rng::shuffle(order, g);
    for (int off = 0; off < n; off += batch) {
      const int len = std::min(batch, n - off);
      std::span<const int> idx(order.data() + off, static_cast<size_t>(len));
      ModelVector grad = batch_gradient_indices(prob.model, w, *prob.shard, idx);
      for (size_t s = 0; s < prob.weights.size(); ++s) {
        const double f = prob.prox_weight * prob.weights[s];
        const auto& c = (*prob.centers)[s];
        for (size_t i = 0; i < p; ++i) grad[i] += f * (w[i] - c[i]);
      }
      if (solver.adaptive) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        ++step_count;
        const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
        for (size_t i = 0; i < p; ++i) {
          m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
          m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
          w[i] -= lr * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + eps);
        }
      } else {
        for (size_t i = 0; i < p; ++i) w[i] -= lr * grad[i];
      }
      if (!vec::all_finite(w))
        throw SolverDivergence("iterative solver produced a non-finite iterate", last_finite);
      last_finite = w;
    }
  }
  return w;
}

ModelVector fit_least_squares(const std::vector<LabeledPoint>& pts, const LossModel& model,
                              const std::vector<double>* point_weights) {
  if (model.kind != LossModel::Kind::LinearRegression)
    throw ContractViolation("least-squares fit requires the linear-regression model");
  if (pts.empty()) throw ContractViolation("least-squares fit over an empty point list");
  const int d = model.input_dim;
  std::vector<double> A, b;
  accumulate_normal_equations(pts, point_weights, d, A, b);
  return solve_quadratic(A, b, d);
}

double measure_inexactness(const ProximalProblem& prob, const ModelVector& w_out,
                           const std::vector<std::vector<LabeledPoint>>& holdouts) {
  prob.check();
  if (holdouts.size() != prob.centers->size())
    throw ContractViolation("one holdout per center required");
  double min_cluster_grad = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < holdouts.size(); ++s) {
    const double g = vec::norm(batch_gradient(prob.model, (*prob.centers)[s], holdouts[s]));
    min_cluster_grad = std::min(min_cluster_grad, g);
  }
  if (min_cluster_grad < 1e-12) return std::numeric_limits<double>::infinity();
  return vec::norm(proximal_gradient(prob, w_out)) / min_cluster_grad;
}

double measure_subproblem_similarity(const ProximalProblem& prob) {
  prob.check();
  if (prob.model.kind != LossModel::Kind::LinearRegression)
    throw ContractViolation("sub-problem similarity requires the linear-regression model");
  const int S = static_cast<int>(prob.centers->size());
  const int d = prob.model.input_dim;

  // Per-source subsets of the shard; the sub-problem of cluster s is the
  // empirical source-s risk plus the distance term to c_s.
  std::vector<std::vector<LabeledPoint>> by_source(static_cast<size_t>(S));
  for (const auto& pt : *prob.shard) {
    if (pt.source < 0 || pt.source >= S)
      throw ContractViolation("point source outside cluster range");
    by_source[static_cast<size_t>(pt.source)].push_back(pt);
  }

  auto subproblem_gradient = [&](int s, const ModelVector& w) {
    ModelVector g = batch_gradient(prob.model, w, by_source[static_cast<size_t>(s)]);
    const auto& c = (*prob.centers)[static_cast<size_t>(s)];
    for (int i = 0; i < d; ++i) g[static_cast<size_t>(i)] += prob.prox_weight * (w[static_cast<size_t>(i)] - c[static_cast<size_t>(i)]);
    return g;
  };

  double beta = 0.0;
  for (int s = 0; s < S; ++s) {
    if (by_source[static_cast<size_t>(s)].empty()) continue;

    // Exact sub-problem minimizer.
    std::vector<double> A, b;
    accumulate_normal_equations(by_source[static_cast<size_t>(s)], nullptr, d, A, b);
    for (int i = 0; i < d; ++i) A[static_cast<size_t>(i) * d + i] += prob.prox_weight;
    vec::axpy(prob.prox_weight, (*prob.centers)[static_cast<size_t>(s)], b);
    const ModelVector w_star = solve_quadratic(A, b, d);

    double numer = 0.0;
    for (int t = 0; t < S; ++t) {
      if (by_source[static_cast<size_t>(t)].empty()) continue;
      const double gn = vec::norm(subproblem_gradient(t, w_star));
      numer += prob.weights[static_cast<size_t>(t)] * gn * gn;
    }
    const double dn =
        vec::norm(batch_gradient(prob.model, (*prob.centers)[static_cast<size_t>(s)],
                                 by_source[static_cast<size_t>(s)]));
    const double denom = dn * dn;
    if (denom < 1e-24) return std::numeric_limits<double>::infinity();
    beta = std::max(beta, numer / denom);
  }
  return beta;
}

}  // namespace fedsoft
