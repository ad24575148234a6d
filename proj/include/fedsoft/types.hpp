#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsoft {

// Dense parameter vector. Every model in one experiment shares its dimension.
using ModelVector = std::vector<double>;

// Ordered cluster models c_0..c_{S-1}; the index is the cluster id.
using CenterSet = std::vector<ModelVector>;

struct LabeledPoint {
  std::vector<double> x;
  double y = 0.0;  // regression target, or class index for classification
  int source = 0;  // ground-truth generating cluster; metrics/diagnostics only
};

struct ClientState {
  int id = 0;
  std::vector<LabeledPoint> shard;
  ModelVector local_model;
  std::vector<double> importance;  // estimated mixture weights, floored
  std::vector<int> match_counts;   // per-cluster matched point counts
  int last_estimated_round = -1;

  int shard_size() const { return static_cast<int>(shard.size()); }
};

struct Seeds {
  uint64_t data = 1;
  uint64_t init = 2;
  uint64_t selection = 3;
};

struct SolverConfig {
  enum class Kind { ClosedForm, GradientIterative };
  Kind kind = Kind::GradientIterative;
  int local_epochs = 10;
  int batch_size = 10;
  double step_size = 5e-3;  // initial step; decays per epoch
  bool adaptive = true;     // adaptive-moment updates when true, plain SGD otherwise
};

struct ExperimentConfig {
  int clusters = 2;             // S
  int clients = 100;            // N
  int select_count = 60;        // K draws per cluster per round
  int estimation_interval = 2;  // rounds an importance estimate is reused
  double smoothing = 1e-4;      // lower floor applied to estimated weights
  double prox_weight = 1.0;     // strength of the proximal pull toward centers
  int rounds = 50;              // T
  SolverConfig solver;
  Seeds seeds;
  int holdout_size = 1000;  // evaluation points per distribution
  int dim = 10;             // feature dimension
  double noise_std = 1.0;   // regression label noise; 0 gives the noiseless variant
  bool select_with_replacement = true;

  void validate() const;  // throws ConfigError
};

struct GeneratorSpec {
  std::string dataset = "regression";  // "regression" | "classification"
  int clusters = 2;
  int dim = 10;
  double param_std = 10.0;  // per-coordinate std of cluster parameter draws
  std::string pattern;
  uint64_t seed = 0;
  double noise_std = 1.0;
  int class_count = 0;      // classification only
  double separation = 0.0;  // classification only
};

struct FederationDataset {
  std::vector<ClientState> clients;
  std::vector<std::vector<LabeledPoint>> holdouts;  // one list per distribution
  std::vector<std::vector<double>> true_mixture;    // N x S, rows sum to 1
  GeneratorSpec generator_spec;

  int total_points() const;
};

struct RoundTrace {
  int round = 0;
  std::vector<std::vector<double>> holdout_loss;  // row: distribution, col: center
  double mean_local_loss = 0.0;
  double importance_error = 0.0;
  int unique_selected = 0;
  int local_solves = 0;
  std::optional<double> joint_objective;  // joint-descent mode only
  long long comm_values = 0;              // values broadcast this round
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};
struct DegenerateProblemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverDivergence : std::runtime_error {
  SolverDivergence(const std::string& msg, ModelVector last)
      : std::runtime_error(msg), last_finite(std::move(last)) {}
  ModelVector last_finite;
  int round = -1;
};

namespace vec {
ModelVector zeros(size_t d);
double dot(const ModelVector& a, const ModelVector& b);
double norm(const ModelVector& a);
double squared_distance(const ModelVector& a, const ModelVector& b);
void axpy(double alpha, const ModelVector& x, ModelVector& y);  // y += alpha * x
ModelVector mean(const std::vector<ModelVector>& vs);
bool all_finite(const ModelVector& a);
}  // namespace vec

// JSON round trips; exact for finite doubles.
std::string client_to_json(const ClientState&);
ClientState client_from_json(const std::string&);
std::string dataset_to_json(const FederationDataset&);
FederationDataset dataset_from_json(const std::string&);
void save_dataset(const FederationDataset&, const std::string& path);
FederationDataset load_dataset(const std::string& path);

}  // namespace fedsoft
