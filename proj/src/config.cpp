#include "fedsoft/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace fedsoft {

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "fedsoft") return Algorithm::FedSoft;
  if (s == "ifca") return Algorithm::Ifca;
  if (s == "fedem") return Algorithm::FedEm;
  if (s == "theorem5") return Algorithm::JointDescent;
  throw ConfigError("field \"algorithm\": expected fedsoft, ifca, fedem or theorem5, got \"" + s +
                    "\"");
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::FedSoft:
      return "fedsoft";
    case Algorithm::Ifca:
      return "ifca";
    case Algorithm::FedEm:
      return "fedem";
    case Algorithm::JointDescent:
      return "theorem5";
  }
  return "?";
}

void RunSpec::validate() const {
  config.validate();
  pattern.validate(config.clients, config.clusters);
  if (dataset != "regression" && dataset != "classification")
    throw ConfigError("field \"dataset\": expected regression or classification");
  if (dataset == "classification") {
    if (class_count < 2) throw ConfigError("field \"classes\": must be >= 2");
    if (separation < 0.0) throw ConfigError("field \"separation\": must be >= 0");
    if (config.solver.kind == SolverConfig::Kind::ClosedForm)
      throw ConfigError("field \"solver\": closed_form requires the linear-regression objective");
    if (algorithm == Algorithm::JointDescent)
      throw ConfigError("field \"algorithm\": theorem5 requires the regression dataset");
  }
  if (dataset == "regression" && param_std <= 0.0)
    throw ConfigError("field \"sigma0\": must be > 0");
}

namespace {

struct RawEntry {
  std::vector<std::string> values;
  bool is_list = false;
  int line = 0;
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

const std::set<std::string> kKnownKeys = {
    "algorithm",     "dataset",       "classes",        "separation",      "S",
    "N",             "K",             "tau",            "sigma",           "lambda",
    "T",             "dim",           "noise_std",      "sigma0",          "partition",
    "data_seed",     "init_seed",     "selection_seed", "holdout_size",    "solver",
    "local_epochs",  "batch_size",    "step_size",      "adaptive",        "with_replacement",
};

const std::vector<std::string> kSweepable = {"lambda", "sigma0", "tau", "partition", "algorithm"};

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("field \"" + key + "\": expected an integer, got \"" + v + "\"");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("field \"" + key + "\": expected a number, got \"" + v + "\"");
  }
}

uint64_t to_seed(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("field \"" + key + "\": expected a non-negative integer, got \"" + v + "\"");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("field \"" + key + "\": expected true or false, got \"" + v + "\"");
}

void apply_field(RunSpec& spec, const std::string& key, const std::string& v) {
  if (key == "algorithm") {
    spec.algorithm = algorithm_from_string(v);
  } else if (key == "dataset") {
    spec.dataset = v;
  } else if (key == "classes") {
    spec.class_count = to_int(key, v);
  } else if (key == "separation") {
    spec.separation = to_double(key, v);
  } else if (key == "S") {
    spec.config.clusters = to_int(key, v);
  } else if (key == "N") {
    spec.config.clients = to_int(key, v);
  } else if (key == "K") {
    spec.config.select_count = to_int(key, v);
  } else if (key == "tau") {
    spec.config.estimation_interval = to_int(key, v);
  } else if (key == "sigma") {
    spec.config.smoothing = to_double(key, v);
  } else if (key == "lambda") {
    spec.config.prox_weight = to_double(key, v);
  } else if (key == "T") {
    spec.config.rounds = to_int(key, v);
  } else if (key == "dim") {
    spec.config.dim = to_int(key, v);
  } else if (key == "noise_std") {
    spec.config.noise_std = to_double(key, v);
  } else if (key == "sigma0") {
    spec.param_std = to_double(key, v);
  } else if (key == "partition") {
    spec.pattern = PartitionPattern::parse(v);
  } else if (key == "data_seed") {
    spec.config.seeds.data = to_seed(key, v);
  } else if (key == "init_seed") {
    spec.config.seeds.init = to_seed(key, v);
  } else if (key == "selection_seed") {
    spec.config.seeds.selection = to_seed(key, v);
  } else if (key == "holdout_size") {
    spec.config.holdout_size = to_int(key, v);
  } else if (key == "solver") {
    if (v == "closed_form")
      spec.config.solver.kind = SolverConfig::Kind::ClosedForm;
    else if (v == "gradient_iterative")
      spec.config.solver.kind = SolverConfig::Kind::GradientIterative;
    else
      throw ConfigError("field \"solver\": expected closed_form or gradient_iterative, got \"" +
                        v + "\"");
  } else if (key == "local_epochs") {
    spec.config.solver.local_epochs = to_int(key, v);
  } else if (key == "batch_size") {
    spec.config.solver.batch_size = to_int(key, v);
  } else if (key == "step_size") {
    spec.config.solver.step_size = to_double(key, v);
  } else if (key == "adaptive") {
    spec.config.solver.adaptive = to_bool(key, v);
  } else if (key == "with_replacement") {
    spec.config.select_with_replacement = to_bool(key, v);
  } else {
    throw ConfigError("unknown key \"" + key + "\"");
  }
}

}  // namespace

ParsedConfig parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, RawEntry>> entries;
  std::set<std::string> seen;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    if (!kKnownKeys.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key \"" + key + "\"");
    if (seen.count(key))
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key \"" + key + "\"");
    seen.insert(key);

    RawEntry entry;
    entry.line = line_no;
    if (value.front() == '[') {
      if (value.back() != ']')
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated list");
      if (std::find(kSweepable.begin(), kSweepable.end(), key) == kSweepable.end())
        throw ConfigError("field \"" + key + "\": does not support sweep lists");
      entry.is_list = true;
      std::string body = value.substr(1, value.size() - 2);
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (!item.empty()) entry.values.push_back(item);
      }
      if (entry.values.empty())
        throw ConfigError("field \"" + key + "\": sweep list must not be empty");
    } else {
      entry.values.push_back(value);
    }
    entries.emplace_back(key, std::move(entry));
  }

  // Cartesian expansion over swept keys in file order.
  ParsedConfig out;
  std::vector<std::pair<std::string, std::vector<std::string>>> swept;
  RunSpec base;
  for (const auto& [key, entry] : entries) {
    if (entry.is_list && entry.values.size() > 1) {
      swept.emplace_back(key, entry.values);
      out.swept_keys.push_back(key);
    } else {
      apply_field(base, key, entry.values.front());
    }
  }

  std::vector<RunSpec> runs{base};
  std::vector<std::string> labels{""};
  for (const auto& [key, values] : swept) {
    std::vector<RunSpec> next;
    std::vector<std::string> next_labels;
    for (size_t r = 0; r < runs.size(); ++r) {
      for (const auto& v : values) {
        RunSpec spec = runs[r];
        apply_field(spec, key, v);
        next.push_back(std::move(spec));
        next_labels.push_back(labels[r].empty() ? key + "=" + v
                                                : labels[r] + "," + key + "=" + v);
      }
    }
    runs = std::move(next);
    labels = std::move(next_labels);
  }
  for (size_t r = 0; r < runs.size(); ++r) {
    runs[r].label = labels[r];
    runs[r].validate();
  }
  out.runs = std::move(runs);
  return out;
}

ParsedConfig parse_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace fedsoft
