#include "fedsoft/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fedsoft/rng.hpp"

namespace fedsoft {

PartitionPattern PartitionPattern::fixed_ratio(int a, int b) {
  PartitionPattern p;
  p.kind = Kind::FixedRatio;
  p.a = a;
  p.b = b;
  return p;
}

PartitionPattern PartitionPattern::linear() {
  PartitionPattern p;
  p.kind = Kind::Linear;
  return p;
}

PartitionPattern PartitionPattern::random() {
  PartitionPattern p;
  p.kind = Kind::Random;
  return p;
}

PartitionPattern PartitionPattern::parse(const std::string& text) {
  if (text == "linear") return linear();
  if (text == "random") return random();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    try {
      const int a = std::stoi(text.substr(0, colon));
      const int b = std::stoi(text.substr(colon + 1));
      return fixed_ratio(a, b);
    } catch (const std::exception&) {
      // fall through to the error below
    }
  }
  throw ConfigError("field \"partition\": expected \"a:b\", \"linear\" or \"random\", got \"" +
                    text + "\"");
}

std::string PartitionPattern::to_string() const {
  switch (kind) {
    case Kind::Linear:
      return "linear";
    case Kind::Random:
      return "random";
    case Kind::FixedRatio:
      return std::to_string(a) + ":" + std::to_string(b);
  }
  return "?";
}

void PartitionPattern::validate(int clients, int clusters) const {
  switch (kind) {
    case Kind::FixedRatio:
      if (a + b != 100 || a < 0 || b < 0)
        throw ConfigError("field \"partition\": fixed ratio requires a + b = 100");
      if (clusters != 2) throw ConfigError("field \"partition\": fixed ratio requires S = 2");
      break;
    case Kind::Linear:
      if (clients != 100 || clusters != 2)
        throw ConfigError("field \"partition\": linear requires N = 100 and S = 2");
      break;
    case Kind::Random:
      break;
  }
}

std::vector<ModelVector> generate_cluster_params(int clusters, int dim, double param_std,
                                                 uint64_t seed) {
  if (clusters < 1 || dim < 1)
    throw ConfigError("cluster parameter generation requires S >= 1 and dim >= 1");
  if (param_std <= 0.0) throw ConfigError("field \"sigma0\": must be > 0");
  auto g = rng::substream(seed, rng::Stream::Params);
  std::vector<ModelVector> params(clusters, ModelVector(dim));
  for (auto& theta : params)
    for (auto& x : theta) x = param_std * rng::normal01(g);
  return params;
}

std::vector<double> mixture_for_client(int k, int clients, int clusters,
                                       const PartitionPattern& pattern, std::mt19937_64& g) {
  pattern.validate(clients, clusters);
  switch (pattern.kind) {
    case PartitionPattern::Kind::FixedRatio: {
      const double lo = pattern.a / 100.0, hi = pattern.b / 100.0;
      if (k < clients / 2) return {lo, hi};
      return {hi, lo};
    }
    case PartitionPattern::Kind::Linear:
      return {(0.5 + k) / 100.0, (99.5 - k) / 100.0};
    case PartitionPattern::Kind::Random: {
      std::vector<double> cuts(clusters - 1);
      for (auto& c : cuts) c = rng::uniform01(g);
      std::sort(cuts.begin(), cuts.end());
      std::vector<double> mix(clusters);
      double prev = 0.0;
      for (int s = 0; s + 1 < clusters; ++s) {
        mix[s] = cuts[s] - prev;
        prev = cuts[s];
      }
      mix[clusters - 1] = 1.0 - prev;
      return mix;
    }
  }
  throw ConfigError("unreachable partition kind");
}

std::vector<int> largest_remainder_counts(const std::vector<double>& mixture, int n) {
  const int S = static_cast<int>(mixture.size());
  std::vector<int> counts(S);
  std::vector<std::pair<double, int>> remainders(S);
  int assigned = 0;
  for (int s = 0; s < S; ++s) {
    const double exact = mixture[s] * n;
    counts[s] = static_cast<int>(std::floor(exact));
    remainders[s] = {exact - counts[s], s};
    assigned += counts[s];
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (int i = 0; i < n - assigned; ++i) counts[remainders[static_cast<size_t>(i)].second]++;
  return counts;
}

namespace {

LabeledPoint regression_point(const ModelVector& theta, int source, int dim, double noise_std,
                              std::mt19937_64& g) {
  LabeledPoint p;
  p.x.resize(dim);
  for (auto& v : p.x) v = rng::normal01(g);
  const double eps = noise_std > 0.0 ? noise_std * rng::normal01(g) : 0.0;
  p.y = vec::dot(p.x, theta) + eps;
  p.source = source;
  return p;
}

FederationDataset assemble(const ExperimentConfig& cfg, const PartitionPattern& pattern,
                           const std::vector<int>* fixed_sizes,
                           const std::function<LabeledPoint(int, std::mt19937_64&)>& draw_point,
                           GeneratorSpec spec) {
  cfg.validate();
  pattern.validate(cfg.clients, cfg.clusters);
  FederationDataset ds;
  ds.generator_spec = std::move(spec);
  ds.true_mixture.assign(cfg.clients, std::vector<double>(cfg.clusters, 0.0));
  ds.clients.reserve(cfg.clients);

  for (int k = 0; k < cfg.clients; ++k) {
    auto g = rng::substream(cfg.seeds.data, rng::Stream::ClientData, static_cast<uint64_t>(k));
    const int n = fixed_sizes ? (*fixed_sizes)[static_cast<size_t>(k)]
                              : rng::uniform_int(g, 100, 200);
    if (n < 1) throw ConfigError("shard sizes must be >= 1");
    const auto mixture = mixture_for_client(k, cfg.clients, cfg.clusters, pattern, g);
    const auto counts = largest_remainder_counts(mixture, n);
    ClientState client;
    client.id = k;
    client.shard.reserve(static_cast<size_t>(n));
    for (int s = 0; s < cfg.clusters; ++s)
      for (int i = 0; i < counts[s]; ++i) client.shard.push_back(draw_point(s, g));
    client.importance.assign(cfg.clusters, 1.0 / cfg.clusters);
    client.match_counts.assign(cfg.clusters, 0);
    for (int s = 0; s < cfg.clusters; ++s)
      ds.true_mixture[k][s] = static_cast<double>(counts[s]) / n;
    ds.clients.push_back(std::move(client));
  }

  ds.holdouts.resize(cfg.clusters);
  for (int s = 0; s < cfg.clusters; ++s) {
    auto g = rng::substream(cfg.seeds.data, rng::Stream::Holdout, static_cast<uint64_t>(s));
    ds.holdouts[s].reserve(static_cast<size_t>(cfg.holdout_size));
    for (int i = 0; i < cfg.holdout_size; ++i) ds.holdouts[s].push_back(draw_point(s, g));
  }
  return ds;
}

}  // namespace

FederationDataset generate_federation_with_sizes(const ExperimentConfig& cfg, double param_std,
                                                 const PartitionPattern& pattern,
                                                 const std::vector<int>& shard_sizes) {
  if (static_cast<int>(shard_sizes.size()) != cfg.clients)
    throw ConfigError("shard size list must have one entry per client");
  const auto params = generate_cluster_params(cfg.clusters, cfg.dim, param_std, cfg.seeds.data);
  GeneratorSpec spec;
  spec.dataset = "regression";
  spec.clusters = cfg.clusters;
  spec.dim = cfg.dim;
  spec.param_std = param_std;
  spec.pattern = pattern.to_string();
  spec.seed = cfg.seeds.data;
  spec.noise_std = cfg.noise_std;
  return assemble(
      cfg, pattern, &shard_sizes,
      [&](int s, std::mt19937_64& g) {
        return regression_point(params[s], s, cfg.dim, cfg.noise_std, g);
      },
      std::move(spec));
}

FederationDataset generate_federation(const ExperimentConfig& cfg, double param_std,
                                      const PartitionPattern& pattern) {
  const auto params = generate_cluster_params(cfg.clusters, cfg.dim, param_std, cfg.seeds.data);
  GeneratorSpec spec;
  spec.dataset = "regression";
  spec.clusters = cfg.clusters;
  spec.dim = cfg.dim;
  spec.param_std = param_std;
  spec.pattern = pattern.to_string();
  spec.seed = cfg.seeds.data;
  spec.noise_std = cfg.noise_std;
  return assemble(
      cfg, pattern, nullptr,
      [&](int s, std::mt19937_64& g) {
        return regression_point(params[s], s, cfg.dim, cfg.noise_std, g);
      },
      std::move(spec));
}

FederationDataset generate_classification_federation(const ExperimentConfig& cfg,
                                                     const PartitionPattern& pattern,
                                                     int class_count, double separation) {
  if (class_count < 2) throw ConfigError("field \"classes\": must be >= 2");
  if (separation < 0.0) throw ConfigError("field \"separation\": must be >= 0");

  // Shared class means, then a unit offset per cluster scaled by `separation`;
  // separation 0 makes every cluster distribution identical.
  auto g = rng::substream(cfg.seeds.data, rng::Stream::Params);
  std::vector<ModelVector> base_means(class_count, ModelVector(cfg.dim));
  for (auto& mu : base_means)
    for (auto& v : mu) v = rng::normal01(g);
  std::vector<ModelVector> offsets(cfg.clusters, ModelVector(cfg.dim, 0.0));
  for (int s = 1; s < cfg.clusters; ++s) {
    double norm2 = 0.0;
    for (auto& v : offsets[s]) {
      v = rng::normal01(g);
      norm2 += v * v;
    }
    const double inv = 1.0 / std::max(std::sqrt(norm2), 1e-12);
    for (auto& v : offsets[s]) v *= inv * separation;
  }

  GeneratorSpec spec;
  spec.dataset = "classification";
  spec.clusters = cfg.clusters;
  spec.dim = cfg.dim;
  spec.param_std = 0.0;
  spec.pattern = pattern.to_string();
  spec.seed = cfg.seeds.data;
  spec.noise_std = 0.0;
  spec.class_count = class_count;
  spec.separation = separation;

  return assemble(
      cfg, pattern, nullptr,
      [&](int s, std::mt19937_64& gg) {
        LabeledPoint p;
        const int cls = rng::uniform_int(gg, 0, class_count - 1);
        p.x.resize(cfg.dim);
        for (int i = 0; i < cfg.dim; ++i)
          p.x[i] = base_means[cls][i] + offsets[s][i] + rng::normal01(gg);
        p.y = static_cast<double>(cls);
        p.source = s;
        return p;
      },
      std::move(spec));
}

}  // namespace fedsoft
