#include "fedsoft/output.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedsoft/metrics.hpp"
#include "json.hpp"

namespace fedsoft {

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string trace_csv(int clusters, const std::vector<RoundTrace>& traces) {
  std::ostringstream out;
  out << "round";
  for (int i = 0; i < clusters; ++i)
    for (int s = 0; s < clusters; ++s) out << ",holdout_" << i << "_" << s;
  out << ",mean_local_loss,importance_error,unique_selected,local_solves,joint_objective\n";
  for (const auto& tr : traces) {
    out << tr.round;
    for (int i = 0; i < clusters; ++i)
      for (int s = 0; s < clusters; ++s)
        out << "," << format_double(tr.holdout_loss[static_cast<size_t>(i)][static_cast<size_t>(s)]);
    out << "," << format_double(tr.mean_local_loss);
    out << "," << format_double(tr.importance_error);
    out << "," << tr.unique_selected;
    out << "," << tr.local_solves;
    out << ",";
    if (tr.joint_objective) out << format_double(*tr.joint_objective);
    out << "\n";
  }
  return out.str();
}

using nlohmann::json;

namespace {

json config_json(const RunSpec& spec) {
  const auto& c = spec.config;
  json j{{"algorithm", to_string(spec.algorithm)},
         {"dataset", spec.dataset},
         {"S", c.clusters},
         {"N", c.clients},
         {"K", c.select_count},
         {"tau", c.estimation_interval},
         {"sigma", c.smoothing},
         {"lambda", c.prox_weight},
         {"T", c.rounds},
         {"dim", c.dim},
         {"noise_std", c.noise_std},
         {"sigma0", spec.param_std},
         {"partition", spec.pattern.to_string()},
         {"holdout_size", c.holdout_size},
         {"with_replacement", c.select_with_replacement},
         {"solver",
          json{{"kind", c.solver.kind == SolverConfig::Kind::ClosedForm ? "closed_form"
                                                                        : "gradient_iterative"},
               {"local_epochs", c.solver.local_epochs},
               {"batch_size", c.solver.batch_size},
               {"step_size", c.solver.step_size},
               {"adaptive", c.solver.adaptive}}},
         {"seeds", json{{"data", c.seeds.data},
                        {"init", c.seeds.init},
                        {"selection", c.seeds.selection}}}};
  if (spec.dataset == "classification") {
    j["classes"] = spec.class_count;
    j["separation"] = spec.separation;
  }
  return j;
}

}  // namespace

std::string summary_json(const RunSpec& spec, const ExperimentResult& result,
                         const FederationDataset& ds, const LossModel& model) {
  json j;
  j["config"] = config_json(spec);
  j["label"] = spec.label;
  j["status"] = result.diverged ? "diverged" : "completed";
  if (result.diverged) j["divergence_note"] = result.divergence_note;
  j["rounds_completed"] = result.traces.size();

  const auto matrix = holdout_matrix(result.centers, ds.holdouts, model);
  const auto assoc = association(matrix);
  json final;
  final["holdout_matrix"] = matrix;
  final["association"] = json{{"best_center", assoc.best_center}, {"distinct", assoc.distinct}};
  if (result.centers.size() >= 2) {
    const auto [lo, hi] = cluster_divergence(result.centers);
    final["divergence"] = json{{"delta", lo}, {"Delta", hi}};
  } else {
    final["divergence"] = nullptr;
  }
  if (!result.traces.empty()) {
    final["mean_local_loss"] = result.traces.back().mean_local_loss;
    final["importance_error"] = result.traces.back().importance_error;
    if (result.traces.back().joint_objective)
      final["joint_objective"] = *result.traces.back().joint_objective;
    else
      final["joint_objective"] = nullptr;
  }
  if (model.kind == LossModel::Kind::MultinomialLogistic)
    final["accuracy_matrix"] = accuracy_matrix(result.centers, ds.holdouts, model);
  j["final"] = std::move(final);

  j["never_selected"] = result.never_selected;
  long long comm = 0;
  for (const auto& tr : result.traces) comm += tr.comm_values;
  j["comm_values_total"] = comm;
  return j.dump(2) + "\n";
}

std::string index_json(const std::vector<IndexEntry>& entries) {
  json runs = json::array();
  for (const auto& e : entries)
    runs.push_back(json{{"label", e.label},
                        {"dir", e.dir},
                        {"trace", e.dir + "/trace.csv"},
                        {"summary", e.dir + "/summary.json"}});
  return json{{"runs", std::move(runs)}}.dump(2) + "\n";
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open for writing: " + tmp.string());
    f << content;
    if (!f.good()) throw ConfigError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace fedsoft
