#pragma once

#include "fedsoft/datagen.hpp"
#include "fedsoft/proximal.hpp"

namespace fedsoft {

struct SelectionOutcome {
  std::vector<std::vector<int>> per_cluster;  // S lists of exactly K client ids
  std::vector<int> unique_clients;            // sorted, deduplicated union
};

struct ServerState {
  CenterSet centers;
  int round = 0;
  ExperimentConfig config;
};

// Per-point lowest-loss matching against the centers; updates match counts
// and floored importance estimates in place.
void estimate_importance(ClientState&, const CenterSet&, const LossModel&, double floor);

// Normalized importance-times-size weights over a selected client list.
std::vector<double> aggregation_weights(const std::vector<double>& cluster_importance,
                                        const std::vector<int>& shard_sizes,
                                        const std::vector<int>& selected);

// Same weights over the full population; used as the selection distribution.
std::vector<double> sampling_distribution(const std::vector<double>& cluster_importance,
                                          const std::vector<int>& shard_sizes);

// K draws per cluster from the per-cluster distributions.
SelectionOutcome select_clients(const std::vector<std::vector<double>>& dist, int select_count,
                                std::mt19937_64& rng, bool with_replacement = true);

// Unweighted mean of exactly K models per cluster (duplicates count twice).
CenterSet aggregate_centers(const std::vector<std::vector<ModelVector>>& models_per_cluster,
                            int select_count);

struct ExperimentResult {
  CenterSet centers;
  std::vector<ClientState> clients;
  std::vector<RoundTrace> traces;
  std::vector<int> never_selected;
  bool diverged = false;
  std::string divergence_note;
};

RoundTrace run_round(ServerState&, std::vector<ClientState>&, const LossModel&,
                     const FederationDataset&, SelectionOutcome* selection_out = nullptr);

ExperimentResult run_experiment(const ExperimentConfig&, const FederationDataset&,
                                const LossModel&);

// Joint block-descent mode: full participation, exact solves, importance
// frozen at the true mixture, centers from the importance-weighted average.
ExperimentResult run_joint_descent(const ExperimentConfig&, const FederationDataset&,
                                   const LossModel&);

CenterSet initial_centers(const ExperimentConfig&, const LossModel&);

}  // namespace fedsoft
