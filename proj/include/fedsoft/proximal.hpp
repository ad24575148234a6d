#pragma once

#include <random>

#include "fedsoft/models.hpp"

namespace fedsoft {

// Immutable snapshot of one client's local objective:
//   h(w) = mean shard loss + (prox_weight / 2) * sum_s weights[s] * ||w - c_s||^2
struct ProximalProblem {
  const std::vector<LabeledPoint>* shard = nullptr;
  const CenterSet* centers = nullptr;
  std::vector<double> weights;  // one entry per center
  double prox_weight = 0.0;
  LossModel model;

  void check() const;  // size/dimension contract, throws ContractViolation
};

double proximal_value(const ProximalProblem&, const ModelVector& w);
ModelVector proximal_gradient(const ProximalProblem&, const ModelVector& w);

// Exact minimizer of the quadratic objective (linear-regression model only).
// Throws DegenerateProblemError when the stationarity system is singular.
ModelVector solve_closed_form(const ProximalProblem&);

// Mini-batch first-order solver with a fixed epoch/batch/step budget,
// starting from `start`. Throws SolverDivergence on a non-finite iterate.
ModelVector solve_iterative(const ProximalProblem&, const ModelVector& start, const SolverConfig&,
                            std::mt19937_64& rng);

// Residual-gradient ratio of a local solution against holdout-estimated
// cluster gradients. Returns +inf when every cluster gradient vanishes.
double measure_inexactness(const ProximalProblem&, const ModelVector& w_out,
                           const std::vector<std::vector<LabeledPoint>>& holdouts);

// Smallest sub-problem-similarity constant consistent with the current state.
// `weights` must hold the client's true per-source ratios; sub-problems are
// formed from the shard's per-source subsets (linear regression only).
double measure_subproblem_similarity(const ProximalProblem&);

// Exact (optionally per-point weighted) least-squares fit; shared by the
// baselines' local steps.
ModelVector fit_least_squares(const std::vector<LabeledPoint>&, const LossModel&,
                              const std::vector<double>* point_weights = nullptr);

}  // namespace fedsoft
