#pragma once

#include <string>
#include <vector>

#include "fedsoft/datagen.hpp"

namespace fedsoft {

enum class Algorithm { FedSoft, Ifca, FedEm, JointDescent };
Algorithm algorithm_from_string(const std::string&);
std::string to_string(Algorithm);

// One fully resolved experiment: algorithm + data recipe + every knob.
struct RunSpec {
  Algorithm algorithm = Algorithm::FedSoft;
  ExperimentConfig config;
  double param_std = 10.0;  // config key "sigma0"
  PartitionPattern pattern = PartitionPattern{};
  std::string dataset = "regression";  // "regression" | "classification"
  int class_count = 3;
  double separation = 2.0;
  std::string label;  // sweep point label, e.g. "sigma0=10"

  void validate() const;
};

struct ParsedConfig {
  std::vector<RunSpec> runs;  // one entry unless the file sweeps
  std::vector<std::string> swept_keys;
};

// Flat key = value format; '#' comments; list values [a, b, c] sweep the
// fields lambda, sigma0, tau, partition and algorithm. Unknown keys are a
// hard error.
ParsedConfig parse_config(const std::string& path);
ParsedConfig parse_config_text(const std::string& text);

}  // namespace fedsoft
