#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fedsoft/runner.hpp"
#include "json.hpp"

using namespace fedsoft;

TEST_CASE("minimal config fills the documented defaults") {
  const auto parsed = parse_config_text("algorithm = fedsoft\ndata_seed = 5\n");
  REQUIRE(parsed.runs.size() == 1);
  const RunSpec& r = parsed.runs[0];
  CHECK(r.algorithm == Algorithm::FedSoft);
  CHECK(r.config.clients == 100);
  CHECK(r.config.select_count == 60);
  CHECK(r.config.estimation_interval == 2);
  CHECK(r.config.smoothing == 1e-4);
  CHECK(r.config.clusters == 2);
  CHECK(r.config.rounds == 50);
  CHECK(r.config.prox_weight == 1.0);
  CHECK(r.param_std == 10.0);
  CHECK(r.config.holdout_size == 1000);
  CHECK(r.config.dim == 10);
  CHECK(r.pattern.to_string() == "10:90");
  CHECK(r.config.seeds.data == 5);
  CHECK(r.config.solver.kind == SolverConfig::Kind::GradientIterative);
  CHECK(r.config.solver.local_epochs == 10);
  CHECK(r.config.solver.batch_size == 10);
  CHECK(r.config.solver.step_size == 5e-3);
}

TEST_CASE("config validation errors carry field names") {
  CHECK_THROWS_WITH_AS(parse_config_text("tau = 0\n"),
                       doctest::Contains("tau"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("frobnicate = 1\n"),
                       doctest::Contains("unknown key"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("tau = 2\ntau = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("N = [50, 100]\n"), ConfigError);  // not sweepable
  CHECK_THROWS_AS(parse_config_text("solver = closed_form\ndataset = classification\n"),
                  ConfigError);
}

TEST_CASE("sweep lists expand into labeled runs") {
  const auto parsed = parse_config_text("sigma0 = [1, 10, 50, 100]\npartition = random\n");
  REQUIRE(parsed.runs.size() == 4);
  CHECK(parsed.swept_keys == std::vector<std::string>{"sigma0"});
  CHECK(parsed.runs[0].param_std == 1.0);
  CHECK(parsed.runs[3].param_std == 100.0);
  CHECK(parsed.runs[1].label == "sigma0=10");
  for (const auto& r : parsed.runs) CHECK(r.pattern.to_string() == "random");

  const auto crossed = parse_config_text("lambda = [0, 1]\nsigma0 = [1, 10]\n");
  CHECK(crossed.runs.size() == 4);
  CHECK(crossed.runs[0].label == "lambda=0,sigma0=1");

  const auto interval = parse_config_text("tau = [1, 2, 5]\n");
  REQUIRE(interval.runs.size() == 3);
  CHECK(interval.runs[2].config.estimation_interval == 5);

  const auto algos = parse_config_text("algorithm = [fedsoft, ifca, fedem]\n");
  REQUIRE(algos.runs.size() == 3);
  CHECK(algos.runs[1].algorithm == Algorithm::Ifca);
}

TEST_CASE("comments and spacing are tolerated") {
  const auto parsed = parse_config_text(
      "# full line comment\n"
      "  S = 2   # trailing comment\n"
      "\n"
      "K = 10\nN = 20\n");
  CHECK(parsed.runs[0].config.clusters == 2);
  CHECK(parsed.runs[0].config.select_count == 10);
}

namespace {

RunSpec tiny_run() {
  auto parsed = parse_config_text(
      "algorithm = fedsoft\nN = 10\nK = 4\nT = 4\nholdout_size = 30\nsolver = closed_form\n"
      "data_seed = 3\ninit_seed = 4\nselection_seed = 5\n");
  return parsed.runs[0];
}

}  // namespace

TEST_CASE("trace CSV is deterministic and carries the documented schema") {
  const RunSpec spec = tiny_run();
  const auto a = execute_run(spec);
  const auto b = execute_run(spec);
  const std::string csv_a = trace_csv(spec.config.clusters, a.result.traces);
  const std::string csv_b = trace_csv(spec.config.clusters, b.result.traces);
  CHECK(csv_a == csv_b);

  std::istringstream in(csv_a);
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "round,holdout_0_0,holdout_0_1,holdout_1_0,holdout_1_1,mean_local_loss,"
        "importance_error,unique_selected,local_solves,joint_objective");
  std::string row;
  std::getline(in, row);
  CHECK(row.back() == ',');  // joint objective column is empty outside that mode
}

TEST_CASE("joint-descent traces fill the objective column") {
  RunSpec spec = tiny_run();
  spec.algorithm = Algorithm::JointDescent;
  const auto out = execute_run(spec);
  const std::string csv = trace_csv(spec.config.clusters, out.result.traces);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  std::getline(in, line);
  CHECK(line.back() != ',');
}

TEST_CASE("summary JSON re-serializes unchanged") {
  const RunSpec spec = tiny_run();
  const auto out = execute_run(spec);
  const std::string summary = summary_json(spec, out.result, out.dataset, out.model);
  const auto parsed = nlohmann::json::parse(summary);
  CHECK(parsed.dump(2) + "\n" == summary);
  CHECK(parsed.at("status") == "completed");
  CHECK(parsed.at("config").at("N") == 10);
  CHECK(parsed.at("final").at("holdout_matrix").size() == 2);
}

TEST_CASE("atomic write creates parents and replaces content") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fedsoft_test_out";
  fs::remove_all(dir);
  const std::string path = (dir / "nested" / "file.txt").string();
  atomic_write(path, "one");
  atomic_write(path, "two");
  std::ifstream f(path);
  std::string content;
  f >> content;
  CHECK(content == "two");
  CHECK(!fs::exists(path + ".tmp"));
  fs::remove_all(dir);
}

TEST_CASE("cli end to end writes trace, summary and index") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fedsoft_cli_e2e";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg_path = (dir / "run.cfg").string();
  {
    std::ofstream f(cfg_path);
    f << "algorithm = fedsoft\nN = 10\nK = 4\nT = 3\nholdout_size = 20\n"
      << "solver = closed_form\nlambda = [0, 1]\n";
  }
  const std::string out_dir = (dir / "out").string();
  std::vector<std::string> args{"fedsoft", cfg_path, "--out", out_dir};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  CHECK(run_cli(static_cast<int>(argv.size()), argv.data()) == 0);
  CHECK(fs::exists(out_dir + "/run_000/trace.csv"));
  CHECK(fs::exists(out_dir + "/run_001/summary.json"));
  CHECK(fs::exists(out_dir + "/index.json"));
  fs::remove_all(dir);
}

TEST_CASE("mode and seed overrides reach the runs") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fedsoft_cli_override";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg_path = (dir / "run.cfg").string();
  {
    std::ofstream f(cfg_path);
    f << "algorithm = fedsoft\nN = 8\nK = 4\nT = 2\nholdout_size = 20\nsolver = closed_form\n";
  }
  const std::string out_dir = (dir / "out").string();
  std::vector<std::string> args{"fedsoft", cfg_path,      "--out",       out_dir,
                                "--mode",  "ifca",        "--data-seed", "77"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  REQUIRE(run_cli(static_cast<int>(argv.size()), argv.data()) == 0);
  const auto summary = nlohmann::json::parse(std::ifstream(out_dir + "/summary.json"));
  CHECK(summary.at("config").at("algorithm") == "ifca");
  CHECK(summary.at("config").at("seeds").at("data") == 77);
  fs::remove_all(dir);
}

TEST_CASE("dataset export and import round trip through the cli surface") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fedsoft_ds_roundtrip";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const RunSpec spec = tiny_run();
  const auto ds = build_dataset(spec);
  const std::string path = (dir / "ds.json").string();
  save_dataset(ds, path);
  const auto loaded = load_dataset(path);
  CHECK(dataset_to_json(loaded) == dataset_to_json(ds));

  const auto direct = execute_run(spec);
  const auto via_import = execute_run(spec, loaded);
  CHECK(trace_csv(spec.config.clusters, direct.result.traces) ==
        trace_csv(spec.config.clusters, via_import.result.traces));
  fs::remove_all(dir);
}
