#include "fedsoft/fedsoft.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fedsoft/metrics.hpp"
#include "fedsoft/rng.hpp"

namespace fedsoft {

void estimate_importance(ClientState& client, const CenterSet& centers, const LossModel& model,
                         double floor) {
  const int S = static_cast<int>(centers.size());
  if (S < 1) throw ContractViolation("estimation against an empty center set");
  if (client.shard.empty()) throw ContractViolation("estimation on an empty shard");
  client.match_counts.assign(static_cast<size_t>(S), 0);
  for (const auto& pt : client.shard) {
    int best = 0;
    double best_loss = point_loss(model, centers[0], pt);
    for (int s = 1; s < S; ++s) {
      const double l = point_loss(model, centers[static_cast<size_t>(s)], pt);
      if (l < best_loss) {
        best_loss = l;
        best = s;
      }
    }
    client.match_counts[static_cast<size_t>(best)]++;
  }
  client.importance.resize(static_cast<size_t>(S));
  const double n = static_cast<double>(client.shard.size());
  for (int s = 0; s < S; ++s)
    client.importance[static_cast<size_t>(s)] =
        std::max(client.match_counts[static_cast<size_t>(s)] / n, floor);
}

std::vector<double> aggregation_weights(const std::vector<double>& cluster_importance,
                                        const std::vector<int>& shard_sizes,
                                        const std::vector<int>& selected) {
  if (selected.empty()) throw ContractViolation("aggregation weights over an empty selection");
  double denom = 0.0;
  for (int k : selected) denom += cluster_importance[static_cast<size_t>(k)] * shard_sizes[static_cast<size_t>(k)];
  if (denom <= 0.0) throw ContractViolation("aggregation weights with zero total mass");
  std::vector<double> v;
  v.reserve(selected.size());
  for (int k : selected)
    v.push_back(cluster_importance[static_cast<size_t>(k)] * shard_sizes[static_cast<size_t>(k)] / denom);
  return v;
}

std::vector<double> sampling_distribution(const std::vector<double>& cluster_importance,
                                          const std::vector<int>& shard_sizes) {
  std::vector<int> everyone(cluster_importance.size());
  for (size_t k = 0; k < everyone.size(); ++k) everyone[k] = static_cast<int>(k);
  return aggregation_weights(cluster_importance, shard_sizes, everyone);
}

SelectionOutcome select_clients(const std::vector<std::vector<double>>& dist, int select_count,
                                std::mt19937_64& g, bool with_replacement) {
  if (select_count < 1) throw ContractViolation("selection size must be >= 1");
  SelectionOutcome out;
  out.per_cluster.resize(dist.size());
  for (size_t s = 0; s < dist.size(); ++s) {
    auto& chosen = out.per_cluster[s];
    chosen.reserve(static_cast<size_t>(select_count));
    if (with_replacement) {
      for (int l = 0; l < select_count; ++l) chosen.push_back(rng::sample_index(g, dist[s]));
    } else {
      if (select_count > static_cast<int>(dist[s].size()))
        throw ContractViolation("cannot select more unique clients than exist");
      std::vector<double> remaining = dist[s];
      double mass = 0.0;
      for (double p : remaining) mass += p;
      for (int l = 0; l < select_count; ++l) {
        const double u = rng::uniform01(g) * mass;
        double acc = 0.0;
        int pick = -1;
        for (size_t k = 0; k < remaining.size(); ++k) {
          acc += remaining[k];
          if (u < acc && remaining[k] > 0.0) {
            pick = static_cast<int>(k);
            break;
          }
        }
        if (pick < 0) {  // numerical tail: take the last positive entry
          for (size_t k = remaining.size(); k > 0; --k)
            if (remaining[k - 1] > 0.0) {
              pick = static_cast<int>(k - 1);
              break;
            }
        }
        chosen.push_back(pick);
        mass -= remaining[static_cast<size_t>(pick)];
        remaining[static_cast<size_t>(pick)] = 0.0;
      }
    }
  }
  std::set<int> uniq;
  for (const auto& list : out.per_cluster) uniq.insert(list.begin(), list.end());
  out.unique_clients.assign(uniq.begin(), uniq.end());
  return out;
}

CenterSet aggregate_centers(const std::vector<std::vector<ModelVector>>& models_per_cluster,
                            int select_count) {
  CenterSet next;
  next.reserve(models_per_cluster.size());
  for (const auto& models : models_per_cluster) {
    if (static_cast<int>(models.size()) != select_count)
      throw ContractViolation("every cluster must aggregate exactly K models");
    next.push_back(vec::mean(models));
  }
  return next;
}

CenterSet initial_centers(const ExperimentConfig& cfg, const LossModel& model) {
  auto g = rng::substream(cfg.seeds.init, rng::Stream::Init);
  const int p = model.param_dim();
  const double std_dev = 1.0 / std::sqrt(static_cast<double>(p));
  CenterSet centers(static_cast<size_t>(cfg.clusters), ModelVector(static_cast<size_t>(p)));
  for (auto& c : centers)
    for (auto& v : c) v = std_dev * rng::normal01(g);
  return centers;
}

namespace {

std::vector<int> shard_sizes_of(const std::vector<ClientState>& clients) {
  std::vector<int> sizes;
  sizes.reserve(clients.size());
  for (const auto& c : clients) sizes.push_back(c.shard_size());
  return sizes;
}

ModelVector solve_client(const ClientState& client, const CenterSet& centers,
                         const ExperimentConfig& cfg, const LossModel& model, int round) {
  ProximalProblem prob{&client.shard, &centers, client.importance, cfg.prox_weight, model};
  if (cfg.solver.kind == SolverConfig::Kind::ClosedForm) return solve_closed_form(prob);
  auto g = rng::substream(cfg.seeds.init, rng::Stream::Solver, static_cast<uint64_t>(round),
                          static_cast<uint64_t>(client.id));
  return solve_iterative(prob, client.local_model, cfg.solver, g);
}

RoundTrace make_trace(int round, const CenterSet& centers, const std::vector<ClientState>& clients,
                      const LossModel& model, const FederationDataset& ds, int unique_selected,
                      int local_solves, long long comm) {
  RoundTrace tr;
  tr.round = round;
  tr.holdout_loss = holdout_matrix(centers, ds.holdouts, model);
  tr.mean_local_loss = mean_local_loss(clients, model);
  tr.importance_error =
      aligned_importance_error(clients, ds.true_mixture, association(tr.holdout_loss));
  tr.unique_selected = unique_selected;
  tr.local_solves = local_solves;
  tr.comm_values = comm;
  return tr;
}

}  // namespace

RoundTrace run_round(ServerState& server, std::vector<ClientState>& clients,
                     const LossModel& model, const FederationDataset& ds,
                     SelectionOutcome* selection_out) {
  const ExperimentConfig& cfg = server.config;
  const int t = server.round;
  long long comm = 0;

  if (t % cfg.estimation_interval == 0) {
    for (auto& client : clients) {
      estimate_importance(client, server.centers, model, cfg.smoothing);
      client.last_estimated_round = t;
    }
    comm = static_cast<long long>(cfg.clients) * cfg.clusters * model.param_dim();
  }

  const auto sizes = shard_sizes_of(clients);
  std::vector<std::vector<double>> dist(static_cast<size_t>(cfg.clusters));
  for (int s = 0; s < cfg.clusters; ++s) {
    std::vector<double> u_s(clients.size());
    for (size_t k = 0; k < clients.size(); ++k) u_s[k] = clients[k].importance[static_cast<size_t>(s)];
    dist[static_cast<size_t>(s)] = sampling_distribution(u_s, sizes);
  }

  auto sel_rng = rng::substream(cfg.seeds.selection, rng::Stream::Selection,
                                static_cast<uint64_t>(t));
  SelectionOutcome sel =
      select_clients(dist, cfg.select_count, sel_rng, cfg.select_with_replacement);

  // Each unique client solves its single proximal problem once; every cluster
  // that drew it reuses the same solution.
  for (int k : sel.unique_clients) {
    try {
      clients[static_cast<size_t>(k)].local_model =
          solve_client(clients[static_cast<size_t>(k)], server.centers, cfg, model, t);
    } catch (SolverDivergence& e) {
      SolverDivergence wrapped("round " + std::to_string(t) + ", client " + std::to_string(k) +
                                   ": " + e.what(),
                               e.last_finite);
      wrapped.round = t;
      throw wrapped;
    }
  }

  std::vector<std::vector<ModelVector>> per_cluster(static_cast<size_t>(cfg.clusters));
  for (int s = 0; s < cfg.clusters; ++s) {
    per_cluster[static_cast<size_t>(s)].reserve(static_cast<size_t>(cfg.select_count));
    for (int k : sel.per_cluster[static_cast<size_t>(s)])
      per_cluster[static_cast<size_t>(s)].push_back(clients[static_cast<size_t>(k)].local_model);
  }
  server.centers = aggregate_centers(per_cluster, cfg.select_count);
  server.round = t + 1;

  if (selection_out) *selection_out = sel;
  return make_trace(t, server.centers, clients, model, ds,
                    static_cast<int>(sel.unique_clients.size()),
                    static_cast<int>(sel.unique_clients.size()), comm);
}

namespace {

void check_dataset(const ExperimentConfig& cfg, const FederationDataset& ds,
                   const LossModel& model) {
  cfg.validate();
  if (static_cast<int>(ds.clients.size()) != cfg.clients)
    throw ConfigError("dataset client count does not match the configuration");
  if (static_cast<int>(ds.holdouts.size()) != cfg.clusters)
    throw ConfigError("dataset holdout count does not match the configuration");
  for (const auto& c : ds.clients)
    if (!c.shard.empty() && static_cast<int>(c.shard.front().x.size()) != model.input_dim)
      throw ConfigError("dataset feature dimension does not match the model");
}

std::vector<ClientState> prepared_clients(const FederationDataset& ds, const CenterSet& centers,
                                          int clusters) {
  std::vector<ClientState> clients = ds.clients;
  const ModelVector w0 = vec::mean(centers);
  for (auto& c : clients) {
    c.local_model = w0;
    c.importance.assign(static_cast<size_t>(clusters), 1.0 / clusters);
    c.match_counts.assign(static_cast<size_t>(clusters), 0);
    c.last_estimated_round = -1;
  }
  return clients;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const FederationDataset& ds,
                                const LossModel& model) {
  check_dataset(cfg, ds, model);
  ExperimentResult res;
  ServerState server{initial_centers(cfg, model), 0, cfg};
  res.clients = prepared_clients(ds, server.centers, cfg.clusters);
  std::vector<bool> ever_selected(static_cast<size_t>(cfg.clients), false);

  for (int t = 0; t < cfg.rounds; ++t) {
    SelectionOutcome sel;
    try {
      res.traces.push_back(run_round(server, res.clients, model, ds, &sel));
    } catch (const SolverDivergence& e) {
      res.diverged = true;
      res.divergence_note = e.what();
      break;
    }
    for (int k : sel.unique_clients) ever_selected[static_cast<size_t>(k)] = true;
  }

  res.centers = server.centers;
  for (int k = 0; k < cfg.clients; ++k)
    if (!ever_selected[static_cast<size_t>(k)]) res.never_selected.push_back(k);
  return res;
}

ExperimentResult run_joint_descent(const ExperimentConfig& cfg, const FederationDataset& ds,
                                   const LossModel& model) {
  check_dataset(cfg, ds, model);
  if (model.kind != LossModel::Kind::LinearRegression)
    throw ConfigError("the joint-descent mode requires the linear-regression model");

  ExperimentResult res;
  CenterSet centers = initial_centers(cfg, model);
  res.clients = prepared_clients(ds, centers, cfg.clusters);
  for (auto& c : res.clients) c.importance = ds.true_mixture[static_cast<size_t>(c.id)];

  // Column mass per cluster for the importance-weighted center update.
  std::vector<double> mass(static_cast<size_t>(cfg.clusters), 0.0);
  for (int k = 0; k < cfg.clients; ++k)
    for (int s = 0; s < cfg.clusters; ++s)
      mass[static_cast<size_t>(s)] += ds.true_mixture[static_cast<size_t>(k)][static_cast<size_t>(s)];

  const long long comm = static_cast<long long>(cfg.clients) * cfg.clusters * model.param_dim();
  for (int t = 0; t < cfg.rounds; ++t) {
    for (auto& client : res.clients) {
      ProximalProblem prob{&client.shard, &centers, client.importance, cfg.prox_weight, model};
      client.local_model = solve_closed_form(prob);
    }
    for (int s = 0; s < cfg.clusters; ++s) {
      if (mass[static_cast<size_t>(s)] <= 0.0) continue;
      ModelVector c(static_cast<size_t>(model.param_dim()), 0.0);
      for (const auto& client : res.clients)
        vec::axpy(client.importance[static_cast<size_t>(s)], client.local_model, c);
      for (auto& v : c) v /= mass[static_cast<size_t>(s)];
      centers[static_cast<size_t>(s)] = std::move(c);
    }
    RoundTrace tr = make_trace(t, centers, res.clients, model, ds, cfg.clients, cfg.clients, comm);
    tr.joint_objective =
        joint_objective(res.clients, centers, ds.true_mixture, cfg.prox_weight, model);
    res.traces.push_back(std::move(tr));
  }
  res.centers = std::move(centers);
  return res;
}

}  // namespace fedsoft
