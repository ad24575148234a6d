#pragma once

#include <string>
#include <vector>

#include "fedsoft/config.hpp"
#include "fedsoft/fedsoft.hpp"

namespace fedsoft {

// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

// Stable schema: round, S*S holdout losses row-major, mean_local_loss,
// importance_error, unique_selected, local_solves, joint_objective (empty
// outside the joint-descent mode).
std::string trace_csv(int clusters, const std::vector<RoundTrace>&);

std::string summary_json(const RunSpec&, const ExperimentResult&, const FederationDataset&,
                         const LossModel&);

struct IndexEntry {
  std::string label;
  std::string dir;
};
std::string index_json(const std::vector<IndexEntry>&);

// Write via a temporary file and rename, so readers never see partial output.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace fedsoft
