#pragma once

#include "fedsoft/baselines.hpp"
#include "fedsoft/config.hpp"
#include "fedsoft/output.hpp"

namespace fedsoft {

LossModel model_for(const RunSpec&);
FederationDataset build_dataset(const RunSpec&);

struct RunOutput {
  FederationDataset dataset;
  LossModel model;
  ExperimentResult result;
};

RunOutput execute_run(const RunSpec&);
RunOutput execute_run(const RunSpec&, FederationDataset dataset);

// Built-in property battery behind --verify; returns the failure count.
int run_verify();

int run_cli(int argc, char** argv);

}  // namespace fedsoft
