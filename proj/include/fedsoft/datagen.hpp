#pragma once

#include <random>
#include <string>

#include "fedsoft/types.hpp"

namespace fedsoft {

struct PartitionPattern {
  enum class Kind { FixedRatio, Linear, Random };
  Kind kind = Kind::FixedRatio;
  int a = 10, b = 90;  // FixedRatio percentages; a + b == 100

  static PartitionPattern fixed_ratio(int a, int b);
  static PartitionPattern linear();
  static PartitionPattern random();
  static PartitionPattern parse(const std::string& text);  // "10:90" | "linear" | "random"
  std::string to_string() const;
  void validate(int clients, int clusters) const;  // throws ConfigError
};

// S independent draws from an isotropic normal with per-coordinate std.
std::vector<ModelVector> generate_cluster_params(int clusters, int dim, double param_std,
                                                 uint64_t seed);

// Mixture vector (length S, sums to 1) for one client under a pattern.
std::vector<double> mixture_for_client(int k, int clients, int clusters, const PartitionPattern&,
                                       std::mt19937_64& rng);

// Integer per-cluster counts from a mixture vector; sums to n exactly.
std::vector<int> largest_remainder_counts(const std::vector<double>& mixture, int n);

FederationDataset generate_federation(const ExperimentConfig&, double param_std,
                                      const PartitionPattern&);

// Class-conditional Gaussian analogue for classification losses; cluster
// distributions differ by a `separation`-scaled offset of every class mean.
FederationDataset generate_classification_federation(const ExperimentConfig&,
                                                     const PartitionPattern&, int class_count,
                                                     double separation);

// Test hook: fixed shard sizes instead of the uniform [100, 200] draw.
FederationDataset generate_federation_with_sizes(const ExperimentConfig&, double param_std,
                                                 const PartitionPattern&,
                                                 const std::vector<int>& shard_sizes);

}  // namespace fedsoft
