#pragma once

#include "fedsoft/models.hpp"

namespace fedsoft {

// Entry (i, s): mean loss of center s on the holdout of distribution i.
std::vector<std::vector<double>> holdout_matrix(const CenterSet&,
                                                const std::vector<std::vector<LabeledPoint>>&,
                                                const LossModel&);

struct Association {
  std::vector<int> best_center;  // per distribution, argmin column
  bool distinct = false;         // true iff the mapping is injective
};
Association association(const std::vector<std::vector<double>>& matrix);

// Mean over clients of the L1 gap between stored and true mixture weights.
double importance_error(const std::vector<ClientState>&,
                        const std::vector<std::vector<double>>& true_mixture);

// Same error after matching cluster indices to distributions through the
// holdout association (center indices are assigned arbitrarily at init).
// Falls back to the identity mapping when the association is not injective.
double aligned_importance_error(const std::vector<ClientState>&,
                                const std::vector<std::vector<double>>& true_mixture,
                                const Association&);

// (min, max) pairwise distance between the given vectors; needs two or more.
std::pair<double, double> cluster_divergence(const std::vector<ModelVector>&);

// Sum over clients of the proximal objective at fixed mixture weights.
double joint_objective(const std::vector<ClientState>&, const CenterSet&,
                       const std::vector<std::vector<double>>& fixed_weights, double prox_weight,
                       const LossModel&);

double mean_local_loss(const std::vector<ClientState>&, const LossModel&);
double mean_local_loss(const std::vector<ClientState>&, const std::vector<ModelVector>&,
                       const LossModel&);

double accuracy(const LossModel&, const ModelVector& w, std::span<const LabeledPoint>);
std::vector<std::vector<double>> accuracy_matrix(const CenterSet&,
                                                 const std::vector<std::vector<LabeledPoint>>&,
                                                 const LossModel&);

}  // namespace fedsoft
