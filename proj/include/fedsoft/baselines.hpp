#pragma once

#include "fedsoft/fedsoft.hpp"

namespace fedsoft {

enum class BaselineKind { Ifca, FedEm };

// Lowest-loss cluster per client under the given centers (ties: lowest id).
std::vector<int> ifca_assignments(const CenterSet&, const std::vector<ClientState>&,
                                  const LossModel&);

// One hard-clustering round: a uniform sample of min(K*S, N) unique clients
// joins its lowest-loss cluster, trains on the plain local risk, and the
// server averages per cluster weighted by shard size. Empty clusters keep
// their center unchanged.
CenterSet ifca_round(const CenterSet&, const std::vector<ClientState>&, const LossModel&,
                     int select_count, const SolverConfig&, const Seeds&, int round,
                     std::vector<int>* participants_out = nullptr);

// One EM round: per-point responsibilities (log-domain) refresh the mixture
// estimates, every client trains one model per cluster with responsibility
// weighting, and the server averages weighted by shard size times mixture.
CenterSet fedem_round(const CenterSet&, const std::vector<ClientState>&,
                      std::vector<std::vector<double>>& pi, const LossModel&, const SolverConfig&,
                      const Seeds&, int round);

// Largest-weight center (ties: lowest id).
const ModelVector& baseline_local_model(const CenterSet&, const std::vector<double>& weights);

ExperimentResult run_baseline_experiment(const ExperimentConfig&, const FederationDataset&,
                                         const LossModel&, BaselineKind);

}  // namespace fedsoft
