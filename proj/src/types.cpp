#include "fedsoft/types.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fedsoft {

void ExperimentConfig::validate() const {
  if (clusters < 1) throw ConfigError("field \"S\": must be >= 1");
  if (clients < 1) throw ConfigError("field \"N\": must be >= 1");
  if (select_count < 1) throw ConfigError("field \"K\": must be >= 1");
  if (select_count > clients) throw ConfigError("field \"K\": must be <= N");
  if (estimation_interval < 1) throw ConfigError("field \"tau\": must be >= 1");
  if (!(smoothing > 0.0 && smoothing < 1.0))
    throw ConfigError("field \"sigma\": must satisfy 0 < sigma < 1");
  if (prox_weight < 0.0) throw ConfigError("field \"lambda\": must be >= 0");
  if (rounds < 1) throw ConfigError("field \"T\": must be >= 1");
  if (dim < 1) throw ConfigError("field \"dim\": must be >= 1");
  if (holdout_size < 1) throw ConfigError("field \"holdout_size\": must be >= 1");
  if (noise_std < 0.0) throw ConfigError("field \"noise_std\": must be >= 0");
  if (solver.local_epochs < 0) throw ConfigError("field \"local_epochs\": must be >= 0");
  if (solver.batch_size < 1) throw ConfigError("field \"batch_size\": must be >= 1");
  if (solver.step_size <= 0.0) throw ConfigError("field \"step_size\": must be > 0");
}

int FederationDataset::total_points() const {
  int total = 0;
  for (const auto& c : clients) total += c.shard_size();
  return total;
}

namespace vec {

ModelVector zeros(size_t d) { return ModelVector(d, 0.0); }

double dot(const ModelVector& a, const ModelVector& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const ModelVector& a) { return std::sqrt(dot(a, a)); }

double squared_distance(const ModelVector& a, const ModelVector& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

void axpy(double alpha, const ModelVector& x, ModelVector& y) {
  for (size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

ModelVector mean(const std::vector<ModelVector>& vs) {
  if (vs.empty()) throw ContractViolation("mean of an empty vector set");
  ModelVector out(vs.front().size(), 0.0);
  for (const auto& v : vs) axpy(1.0, v, out);
  const double inv = 1.0 / static_cast<double>(vs.size());
  for (auto& x : out) x *= inv;
  return out;
}

bool all_finite(const ModelVector& a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace vec

using nlohmann::json;

static json point_to_json(const LabeledPoint& p) {
  return json{{"x", p.x}, {"y", p.y}, {"source", p.source}};
}

static LabeledPoint point_from_json(const json& j) {
  LabeledPoint p;
  p.x = j.at("x").get<std::vector<double>>();
  p.y = j.at("y").get<double>();
  p.source = j.at("source").get<int>();
  return p;
}

static json client_to_json_obj(const ClientState& c) {
  json shard = json::array();
  for (const auto& p : c.shard) shard.push_back(point_to_json(p));
  return json{{"id", c.id},
              {"shard", std::move(shard)},
              {"local_model", c.local_model},
              {"importance", c.importance},
              {"match_counts", c.match_counts},
              {"last_estimated_round", c.last_estimated_round}};
}

static ClientState client_from_json_obj(const json& j) {
  ClientState c;
  c.id = j.at("id").get<int>();
  for (const auto& pj : j.at("shard")) c.shard.push_back(point_from_json(pj));
  c.local_model = j.at("local_model").get<ModelVector>();
  c.importance = j.at("importance").get<std::vector<double>>();
  c.match_counts = j.at("match_counts").get<std::vector<int>>();
  c.last_estimated_round = j.at("last_estimated_round").get<int>();
  return c;
}

std::string client_to_json(const ClientState& c) { return client_to_json_obj(c).dump(); }

ClientState client_from_json(const std::string& text) {
  return client_from_json_obj(json::parse(text));
}

static json spec_to_json(const GeneratorSpec& g) {
  return json{{"dataset", g.dataset},       {"clusters", g.clusters},
              {"dim", g.dim},               {"param_std", g.param_std},
              {"pattern", g.pattern},       {"seed", g.seed},
              {"noise_std", g.noise_std},   {"class_count", g.class_count},
              {"separation", g.separation}};
}

static GeneratorSpec spec_from_json(const json& j) {
  GeneratorSpec g;
  g.dataset = j.at("dataset").get<std::string>();
  g.clusters = j.at("clusters").get<int>();
  g.dim = j.at("dim").get<int>();
  g.param_std = j.at("param_std").get<double>();
  g.pattern = j.at("pattern").get<std::string>();
  g.seed = j.at("seed").get<uint64_t>();
  g.noise_std = j.at("noise_std").get<double>();
  g.class_count = j.at("class_count").get<int>();
  g.separation = j.at("separation").get<double>();
  return g;
}

std::string dataset_to_json(const FederationDataset& d) {
  json clients = json::array();
  for (const auto& c : d.clients) clients.push_back(client_to_json_obj(c));
  json holdouts = json::array();
  for (const auto& h : d.holdouts) {
    json list = json::array();
    for (const auto& p : h) list.push_back(point_to_json(p));
    holdouts.push_back(std::move(list));
  }
  json j{{"generator_spec", spec_to_json(d.generator_spec)},
         {"clients", std::move(clients)},
         {"holdouts", std::move(holdouts)},
         {"true_mixture", d.true_mixture}};
  return j.dump();
}

FederationDataset dataset_from_json(const std::string& text) {
  const json j = json::parse(text);
  FederationDataset d;
  d.generator_spec = spec_from_json(j.at("generator_spec"));
  for (const auto& cj : j.at("clients")) d.clients.push_back(client_from_json_obj(cj));
  for (const auto& hj : j.at("holdouts")) {
    std::vector<LabeledPoint> list;
    for (const auto& pj : hj) list.push_back(point_from_json(pj));
    d.holdouts.push_back(std::move(list));
  }
  d.true_mixture = j.at("true_mixture").get<std::vector<std::vector<double>>>();
  return d;
}

void save_dataset(const FederationDataset& d, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path);
  f << dataset_to_json(d);
}

FederationDataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open dataset file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return dataset_from_json(ss.str());
}

}  // namespace fedsoft
