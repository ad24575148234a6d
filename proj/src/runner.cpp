#include "fedsoft/runner.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "fedsoft/metrics.hpp"
#include "fedsoft/rng.hpp"

namespace fedsoft {

LossModel model_for(const RunSpec& spec) {
  if (spec.dataset == "classification")
    return LossModel::multinomial_logistic(spec.config.dim, spec.class_count);
  return LossModel::linear_regression(spec.config.dim);
}

FederationDataset build_dataset(const RunSpec& spec) {
  if (spec.dataset == "classification")
    return generate_classification_federation(spec.config, spec.pattern, spec.class_count,
                                              spec.separation);
  return generate_federation(spec.config, spec.param_std, spec.pattern);
}

RunOutput execute_run(const RunSpec& spec, FederationDataset dataset) {
  RunOutput out{std::move(dataset), model_for(spec), {}};
  switch (spec.algorithm) {
    case Algorithm::FedSoft:
      out.result = run_experiment(spec.config, out.dataset, out.model);
      break;
    case Algorithm::Ifca:
      out.result = run_baseline_experiment(spec.config, out.dataset, out.model, BaselineKind::Ifca);
      break;
    case Algorithm::FedEm:
      out.result =
          run_baseline_experiment(spec.config, out.dataset, out.model, BaselineKind::FedEm);
      break;
    case Algorithm::JointDescent:
      out.result = run_joint_descent(spec.config, out.dataset, out.model);
      break;
  }
  return out;
}

RunOutput execute_run(const RunSpec& spec) {
  spec.validate();
  return execute_run(spec, build_dataset(spec));
}

namespace {

bool verify_check(const std::string& name, bool ok, std::ostream& os) {
  os << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
  return ok;
}

}  // namespace

int run_verify() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    if (!verify_check(name, ok, std::cout)) ++failures;
  };

  // Gradient consistency against finite differences, both models.
  {
    auto g = rng::substream(7, rng::Stream::Params);
    bool ok = true;
    for (const LossModel model :
         {LossModel::linear_regression(6), LossModel::multinomial_logistic(5, 3)}) {
      for (int probe = 0; probe < 40 && ok; ++probe) {
        LabeledPoint p;
        p.x.resize(static_cast<size_t>(model.input_dim));
        for (auto& v : p.x) v = rng::normal01(g);
        p.y = model.kind == LossModel::Kind::LinearRegression
                  ? rng::normal01(g)
                  : static_cast<double>(rng::uniform_int(g, 0, model.class_count - 1));
        ModelVector w(static_cast<size_t>(model.param_dim()));
        for (auto& v : w) v = rng::normal01(g);
        ModelVector dir(w.size());
        for (auto& v : dir) v = rng::normal01(g);
        const double eps = 1e-5;
        ModelVector wp = w, wm = w;
        vec::axpy(eps, dir, wp);
        vec::axpy(-eps, dir, wm);
        const double fd = (point_loss(model, wp, p) - point_loss(model, wm, p)) / (2 * eps);
        const double an = vec::dot(point_gradient(model, w, p), dir);
        if (std::fabs(fd - an) > 1e-4 * std::max(1.0, std::fabs(an))) ok = false;
      }
    }
    check("loss gradients match finite differences", ok);
  }

  // Closed-form proximal solve leaves a negligible stationarity residual.
  {
    ExperimentConfig cfg;
    cfg.clients = 6;
    cfg.select_count = 3;
    cfg.holdout_size = 10;
    cfg.seeds = {11, 12, 13};
    const auto ds = generate_federation(cfg, 1.0, PartitionPattern::random());
    const auto model = LossModel::linear_regression(cfg.dim);
    const auto params = generate_cluster_params(cfg.clusters, cfg.dim, 1.0, cfg.seeds.data);
    bool ok = true;
    for (const auto& client : ds.clients) {
      ProximalProblem prob{&client.shard, &params, ds.true_mixture[static_cast<size_t>(client.id)],
                           1.0, model};
      const auto w = solve_closed_form(prob);
      if (vec::norm(proximal_gradient(prob, w)) > 1e-8) ok = false;
    }
    check("closed-form proximal solves are stationary", ok);
  }

  // Importance floor and match-count conservation.
  {
    ExperimentConfig cfg;
    cfg.clients = 10;
    cfg.select_count = 5;
    cfg.holdout_size = 10;
    cfg.seeds = {21, 22, 23};
    const auto ds = generate_federation(cfg, 10.0, PartitionPattern::fixed_ratio(10, 90));
    const auto model = LossModel::linear_regression(cfg.dim);
    auto centers = generate_cluster_params(cfg.clusters, cfg.dim, 10.0, cfg.seeds.data);
    bool ok = true;
    for (auto client : ds.clients) {
      estimate_importance(client, centers, model, cfg.smoothing);
      int total = 0;
      for (int c : client.match_counts) total += c;
      if (total != client.shard_size()) ok = false;
      for (double u : client.importance)
        if (u < cfg.smoothing) ok = false;
    }
    check("importance estimates respect the smoothing floor", ok);
  }

  // Expected unique-selection count under uniform sampling of distinct sets.
  {
    const int N = 100, K = 60, S = 2, R = 400;
    std::vector<std::vector<double>> dist(
        static_cast<size_t>(S), std::vector<double>(static_cast<size_t>(N), 1.0 / N));
    auto g = rng::substream(5, rng::Stream::Selection);
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < R; ++r) {
      const auto sel = select_clients(dist, K, g, false);
      const double u = static_cast<double>(sel.unique_clients.size());
      sum += u;
      sum2 += u * u;
    }
    const double mean = sum / R;
    const double sd = std::sqrt(std::max(sum2 / R - mean * mean, 0.0));
    const double expected = N * (1.0 - std::pow(1.0 - static_cast<double>(K) / N, S));
    check("unique selection count matches the expected overlap",
          std::fabs(mean - expected) <= 3.0 * sd / std::sqrt(static_cast<double>(R)));
  }

  // Dataset generation is deterministic.
  {
    ExperimentConfig cfg;
    cfg.clients = 8;
    cfg.select_count = 4;
    cfg.holdout_size = 20;
    cfg.seeds = {31, 32, 33};
    const auto a = generate_federation(cfg, 10.0, PartitionPattern::random());
    const auto b = generate_federation(cfg, 10.0, PartitionPattern::random());
    check("dataset generation is deterministic", dataset_to_json(a) == dataset_to_json(b));
  }

  std::cout << (failures == 0 ? "verify: all checks passed\n"
                              : "verify: " + std::to_string(failures) + " check(s) failed\n");
  return failures;
}

namespace {

void write_run_outputs(const std::string& dir, const RunSpec& spec, const RunOutput& out) {
  atomic_write(dir + "/trace.csv", trace_csv(spec.config.clusters, out.result.traces));
  atomic_write(dir + "/summary.json", summary_json(spec, out.result, out.dataset, out.model));
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Soft clustered federated learning simulator"};
  std::string config_path;
  std::string out_dir;
  std::string mode_override;
  std::string export_dataset_path;
  std::string import_dataset_path;
  bool verify = false;
  uint64_t data_seed = 0, init_seed = 0, selection_seed = 0;
  bool has_data_seed = false, has_init_seed = false, has_selection_seed = false;

  app.add_option("config", config_path, "experiment config file");
  app.add_option("--out", out_dir, "output directory (default: FEDSOFT_OUT or ./out)");
  app.add_option("--mode", mode_override, "override the algorithm")
      ->check(CLI::IsMember({"fedsoft", "ifca", "fedem", "theorem5"}));
  app.add_option("--data-seed", data_seed, "override the data seed")
      ->each([&](const std::string&) { has_data_seed = true; });
  app.add_option("--init-seed", init_seed, "override the initialization seed")
      ->each([&](const std::string&) { has_init_seed = true; });
  app.add_option("--selection-seed", selection_seed, "override the selection seed")
      ->each([&](const std::string&) { has_selection_seed = true; });
  app.add_flag("--verify", verify, "run the built-in property suite and exit");
  app.add_option("--export-dataset", export_dataset_path,
                 "generate the dataset, write it as JSON, and exit");
  app.add_option("--import-dataset", import_dataset_path,
                 "run on a previously exported dataset instead of generating");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (verify) return run_verify() == 0 ? 0 : 1;
  if (config_path.empty()) {
    std::cerr << "error: a config file is required (or pass --verify)\n";
    return 2;
  }
  if (out_dir.empty()) {
    const char* env = std::getenv("FEDSOFT_OUT");
    out_dir = env ? env : "out";
  }

  try {
    ParsedConfig parsed = parse_config(config_path);
    for (auto& spec : parsed.runs) {
      if (!mode_override.empty()) spec.algorithm = algorithm_from_string(mode_override);
      if (has_data_seed) spec.config.seeds.data = data_seed;
      if (has_init_seed) spec.config.seeds.init = init_seed;
      if (has_selection_seed) spec.config.seeds.selection = selection_seed;
      spec.validate();
    }

    if (!export_dataset_path.empty()) {
      save_dataset(build_dataset(parsed.runs.front()), export_dataset_path);
      std::cout << "dataset written to " << export_dataset_path << "\n";
      return 0;
    }

    const bool sweep = parsed.runs.size() > 1;
    std::vector<IndexEntry> index;
    for (size_t r = 0; r < parsed.runs.size(); ++r) {
      const RunSpec& spec = parsed.runs[r];
      RunOutput out = import_dataset_path.empty()
                          ? execute_run(spec)
                          : execute_run(spec, load_dataset(import_dataset_path));
      std::string dir = out_dir;
      if (sweep) {
        char sub[32];
        std::snprintf(sub, sizeof(sub), "run_%03zu", r);
        dir += std::string("/") + sub;
        index.push_back({spec.label, sub});
      }
      write_run_outputs(dir, spec, out);
      std::cout << to_string(spec.algorithm) << (spec.label.empty() ? "" : " [" + spec.label + "]")
                << ": " << out.result.traces.size() << " rounds -> " << dir
                << (out.result.diverged ? " (diverged)" : "") << "\n";
    }
    if (sweep) atomic_write(out_dir + "/index.json", index_json(index));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fedsoft
