#include "fedsoft/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedsoft/metrics.hpp"
#include "fedsoft/rng.hpp"

namespace fedsoft {

std::vector<int> ifca_assignments(const CenterSet& centers, const std::vector<ClientState>& clients,
                                  const LossModel& model) {
  std::vector<int> assignment(clients.size(), 0);
  for (size_t k = 0; k < clients.size(); ++k) {
    double best = batch_risk(model, centers[0], clients[k].shard);
    for (size_t s = 1; s < centers.size(); ++s) {
      const double l = batch_risk(model, centers[s], clients[k].shard);
      if (l < best) {
        best = l;
        assignment[k] = static_cast<int>(s);
      }
    }
  }
  return assignment;
}

namespace {

// Local training on the plain client risk (no proximal term).
ModelVector local_fit(const ClientState& client, const ModelVector& start, const LossModel& model,
                      const SolverConfig& solver, const Seeds& seeds, int round, uint64_t stream) {
  if (solver.kind == SolverConfig::Kind::ClosedForm)
    return fit_least_squares(client.shard, model);
  static const CenterSet no_centers;
  ProximalProblem prob{&client.shard, &no_centers, {}, 0.0, model};
  auto g = rng::substream(seeds.init, rng::Stream::Solver, static_cast<uint64_t>(round), stream);
  return solve_iterative(prob, start, solver, g);
}

// Responsibility-weighted mini-batch training for one cluster model.
ModelVector weighted_local_fit(const ClientState& client, const std::vector<double>& resp,
                               const ModelVector& start, const LossModel& model,
                               const SolverConfig& solver, const Seeds& seeds, int round,
                               uint64_t stream) {
  double mass = 0.0;
  for (double r : resp) mass += r;
  if (mass <= 1e-12 * static_cast<double>(resp.size())) return start;
  if (solver.kind == SolverConfig::Kind::ClosedForm) {
    try {
      return fit_least_squares(client.shard, model, &resp);
    } catch (const DegenerateProblemError&) {
      return start;  // responsibilities concentrated on too few points
    }
  }
  auto g = rng::substream(seeds.init, rng::Stream::Solver, static_cast<uint64_t>(round), stream);
  ModelVector w = start;
  const int n = client.shard_size();
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
      std::vector<LabeledPoint> pts;
      std::vector<double> wts;
      pts.reserve(static_cast<size_t>(len));
      wts.reserve(static_cast<size_t>(len));
      double batch_mass = 0.0;
      for (int i = 0; i < len; ++i) {
        const int idx = order[static_cast<size_t>(off + i)];
        pts.push_back(client.shard[static_cast<size_t>(idx)]);
        wts.push_back(resp[static_cast<size_t>(idx)]);
        batch_mass += resp[static_cast<size_t>(idx)];
      }
      if (batch_mass <= 0.0) continue;
      ModelVector grad = weighted_gradient(model, w, pts, wts);
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
        throw SolverDivergence("weighted solver produced a non-finite iterate", last_finite);
      last_finite = w;
    }
  }
  return w;
}

}  // namespace

CenterSet ifca_round(const CenterSet& centers, const std::vector<ClientState>& clients,
                     const LossModel& model, int select_count, const SolverConfig& solver,
                     const Seeds& seeds, int round, std::vector<int>* participants_out) {
  const int N = static_cast<int>(clients.size());
  const int S = static_cast<int>(centers.size());
  const int m = std::min(static_cast<long long>(select_count) * S, static_cast<long long>(N));

  // Uniform sample of m unique participants.
  std::vector<int> ids(static_cast<size_t>(N));
  std::iota(ids.begin(), ids.end(), 0);
  auto g = rng::substream(seeds.selection, rng::Stream::Selection, static_cast<uint64_t>(round));
  rng::shuffle(ids, g);
  ids.resize(static_cast<size_t>(m));
  std::sort(ids.begin(), ids.end());
  if (participants_out) *participants_out = ids;

  std::vector<ModelVector> sums(static_cast<size_t>(S),
                                ModelVector(static_cast<size_t>(model.param_dim()), 0.0));
  std::vector<double> masses(static_cast<size_t>(S), 0.0);
  for (int k : ids) {
    const auto& client = clients[static_cast<size_t>(k)];
    int join = 0;
    double best = batch_risk(model, centers[0], client.shard);
    for (int s = 1; s < S; ++s) {
      const double l = batch_risk(model, centers[static_cast<size_t>(s)], client.shard);
      if (l < best) {
        best = l;
        join = s;
      }
    }
    const ModelVector w = local_fit(client, centers[static_cast<size_t>(join)], model, solver,
                                    seeds, round, static_cast<uint64_t>(k));
    const double n_k = static_cast<double>(client.shard_size());
    vec::axpy(n_k, w, sums[static_cast<size_t>(join)]);
    masses[static_cast<size_t>(join)] += n_k;
  }

  CenterSet next = centers;  // empty clusters keep their center unchanged
  for (int s = 0; s < S; ++s) {
    if (masses[static_cast<size_t>(s)] <= 0.0) continue;
    next[static_cast<size_t>(s)] = sums[static_cast<size_t>(s)];
    for (auto& v : next[static_cast<size_t>(s)]) v /= masses[static_cast<size_t>(s)];
  }
  return next;
}

CenterSet fedem_round(const CenterSet& centers, const std::vector<ClientState>& clients,
                      std::vector<std::vector<double>>& pi, const LossModel& model,
                      const SolverConfig& solver, const Seeds& seeds, int round) {
  const int N = static_cast<int>(clients.size());
  const int S = static_cast<int>(centers.size());

  std::vector<ModelVector> sums(static_cast<size_t>(S),
                                ModelVector(static_cast<size_t>(model.param_dim()), 0.0));
  std::vector<double> masses(static_cast<size_t>(S), 0.0);
  std::vector<std::vector<double>> pi_next(pi);

  for (int k = 0; k < N; ++k) {
    const auto& client = clients[static_cast<size_t>(k)];
    const int n = client.shard_size();

    // E-step, log domain: r_i(s) proportional to pi_ks * exp(-loss).
    std::vector<std::vector<double>> resp(static_cast<size_t>(S),
                                          std::vector<double>(static_cast<size_t>(n)));
    std::vector<double> mean_resp(static_cast<size_t>(S), 0.0);
    std::vector<double> scores(static_cast<size_t>(S));
    for (int i = 0; i < n; ++i) {
      for (int s = 0; s < S; ++s)
        scores[static_cast<size_t>(s)] =
            std::log(std::max(pi[static_cast<size_t>(k)][static_cast<size_t>(s)], 1e-300)) -
            point_loss(model, centers[static_cast<size_t>(s)], client.shard[static_cast<size_t>(i)]);
      const double mx = *std::max_element(scores.begin(), scores.end());
      double z = 0.0;
      for (int s = 0; s < S; ++s) z += std::exp(scores[static_cast<size_t>(s)] - mx);
      for (int s = 0; s < S; ++s) {
        const double r = std::exp(scores[static_cast<size_t>(s)] - mx) / z;
        resp[static_cast<size_t>(s)][static_cast<size_t>(i)] = r;
        mean_resp[static_cast<size_t>(s)] += r / n;
      }
    }
    pi_next[static_cast<size_t>(k)] = mean_resp;

    // M-step: one responsibility-weighted solve per cluster.
    for (int s = 0; s < S; ++s) {
      const ModelVector w = weighted_local_fit(client, resp[static_cast<size_t>(s)],
                                               centers[static_cast<size_t>(s)], model, solver,
                                               seeds, round,
                                               static_cast<uint64_t>(k) * static_cast<uint64_t>(S) +
                                                   static_cast<uint64_t>(s));
      const double mass = static_cast<double>(n) * mean_resp[static_cast<size_t>(s)];
      vec::axpy(mass, w, sums[static_cast<size_t>(s)]);
      masses[static_cast<size_t>(s)] += mass;
    }
  }

  pi = std::move(pi_next);
  CenterSet next = centers;
  for (int s = 0; s < S; ++s) {
    if (masses[static_cast<size_t>(s)] <= 1e-12) continue;
    next[static_cast<size_t>(s)] = sums[static_cast<size_t>(s)];
    for (auto& v : next[static_cast<size_t>(s)]) v /= masses[static_cast<size_t>(s)];
  }
  return next;
}

const ModelVector& baseline_local_model(const CenterSet& centers,
                                        const std::vector<double>& weights) {
  if (weights.size() != centers.size())
    throw ContractViolation("one weight per center required");
  size_t best = 0;
  for (size_t s = 1; s < weights.size(); ++s)
    if (weights[s] > weights[best]) best = s;
  return centers[best];
}

ExperimentResult run_baseline_experiment(const ExperimentConfig& cfg, const FederationDataset& ds,
                                         const LossModel& model, BaselineKind kind) {
  cfg.validate();
  if (static_cast<int>(ds.clients.size()) != cfg.clients)
    throw ConfigError("dataset client count does not match the configuration");

  ExperimentResult res;
  CenterSet centers = initial_centers(cfg, model);
  res.clients = ds.clients;
  const ModelVector w0 = vec::mean(centers);
  for (auto& c : res.clients) {
    c.local_model = w0;
    c.importance.assign(static_cast<size_t>(cfg.clusters), 1.0 / cfg.clusters);
    c.match_counts.assign(static_cast<size_t>(cfg.clusters), 0);
  }
  std::vector<std::vector<double>> pi(
      static_cast<size_t>(cfg.clients),
      std::vector<double>(static_cast<size_t>(cfg.clusters), 1.0 / cfg.clusters));

  const long long comm = static_cast<long long>(cfg.clients) * cfg.clusters * model.param_dim();
  for (int t = 0; t < cfg.rounds; ++t) {
    int participants = 0;
    int solves = 0;
    try {
      if (kind == BaselineKind::Ifca) {
        std::vector<int> ids;
        centers = ifca_round(centers, res.clients, model, cfg.select_count, cfg.solver, cfg.seeds,
                             t, &ids);
        participants = static_cast<int>(ids.size());
        solves = participants;
        const auto assignment = ifca_assignments(centers, res.clients, model);
        for (int k = 0; k < cfg.clients; ++k) {
          auto& imp = res.clients[static_cast<size_t>(k)].importance;
          std::fill(imp.begin(), imp.end(), 0.0);
          imp[static_cast<size_t>(assignment[static_cast<size_t>(k)])] = 1.0;
        }
      } else {
        centers = fedem_round(centers, res.clients, pi, model, cfg.solver, cfg.seeds, t);
        participants = cfg.clients;
        solves = cfg.clients * cfg.clusters;
        for (int k = 0; k < cfg.clients; ++k)
          res.clients[static_cast<size_t>(k)].importance = pi[static_cast<size_t>(k)];
      }
    } catch (const SolverDivergence& e) {
      res.diverged = true;
      res.divergence_note = "round " + std::to_string(t) + ": " + e.what();
      break;
    }

    std::vector<ModelVector> locals;
    locals.reserve(res.clients.size());
    for (const auto& c : res.clients) locals.push_back(baseline_local_model(centers, c.importance));

    RoundTrace tr;
    tr.round = t;
    tr.holdout_loss = holdout_matrix(centers, ds.holdouts, model);
    tr.mean_local_loss = mean_local_loss(res.clients, locals, model);
    tr.importance_error =
        aligned_importance_error(res.clients, ds.true_mixture, association(tr.holdout_loss));
    tr.unique_selected = participants;
    tr.local_solves = solves;
    tr.comm_values = comm;
    res.traces.push_back(std::move(tr));
  }

  // Clients report their largest-weight center as the personalized model.
  for (auto& c : res.clients) c.local_model = baseline_local_model(centers, c.importance);
  res.centers = std::move(centers);
  return res;
}

}  // namespace fedsoft
