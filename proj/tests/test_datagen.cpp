#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fedsoft/datagen.hpp"
#include "fedsoft/metrics.hpp"
#include "fedsoft/proximal.hpp"
#include "fedsoft/rng.hpp"

using namespace fedsoft;

TEST_CASE("cluster parameter draws") {
  SUBCASE("two distinct vectors at the documented scale") {
    const auto params = generate_cluster_params(2, 10, 10.0, 5);
    REQUIRE(params.size() == 2);
    CHECK(params[0].size() == 10);
    CHECK(vec::squared_distance(params[0], params[1]) > 0.0);
    const auto again = generate_cluster_params(2, 10, 10.0, 5);
    CHECK(params == again);  // deterministic given the seed
  }

  SUBCASE("vanishing spread gives a near-zero vector") {
    const auto params = generate_cluster_params(1, 1, 1e-12, 9);
    CHECK(std::fabs(params[0][0]) < 1e-10);
  }

  SUBCASE("sample statistics match the target normal") {
    // 1e5+ entries pooled over seeds; mean -> 0 and std -> 1 within 3 SE.
    const int reps = 9000;
    double sum = 0.0, sum2 = 0.0;
    long count = 0;
    for (int rep = 0; rep < reps; ++rep) {
      const auto params = generate_cluster_params(3, 4, 1.0, 1000 + static_cast<uint64_t>(rep));
      for (const auto& theta : params)
        for (double v : theta) {
          sum += v;
          sum2 += v * v;
          ++count;
        }
    }
    const double n = static_cast<double>(count);
    REQUIRE(count >= 100000);
    const double mean = sum / n;
    const double stddev = std::sqrt(sum2 / n - mean * mean);
    CHECK(std::fabs(mean) <= 3.0 / std::sqrt(n));
    CHECK(std::fabs(stddev - 1.0) <= 3.0 / std::sqrt(2.0 * n));
  }

  SUBCASE("invalid dimensions rejected") {
    CHECK_THROWS_AS(generate_cluster_params(0, 4, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(generate_cluster_params(2, 4, 0.0, 1), ConfigError);
  }
}

TEST_CASE("mixture patterns") {
  auto g = rng::substream(1, rng::Stream::ClientData);

  SUBCASE("linear endpoints") {
    const auto m = mixture_for_client(0, 100, 2, PartitionPattern::linear(), g);
    CHECK(m[0] == doctest::Approx(0.005));
    CHECK(m[1] == doctest::Approx(0.995));
    const auto last = mixture_for_client(99, 100, 2, PartitionPattern::linear(), g);
    CHECK(last[0] == doctest::Approx(0.995));
  }

  SUBCASE("fixed ratio halves") {
    const auto m = mixture_for_client(30, 100, 2, PartitionPattern::fixed_ratio(30, 70), g);
    CHECK(m[0] == doctest::Approx(0.30));
    CHECK(m[1] == doctest::Approx(0.70));
    const auto flipped = mixture_for_client(50, 100, 2, PartitionPattern::fixed_ratio(30, 70), g);
    CHECK(flipped[0] == doctest::Approx(0.70));
  }

  SUBCASE("random segments sum to one") {
    for (int s : {2, 5, 8}) {
      for (int rep = 0; rep < 20; ++rep) {
        const auto m = mixture_for_client(rep, 100, s, PartitionPattern::random(), g);
        REQUIRE(static_cast<int>(m.size()) == s);
        CHECK(std::accumulate(m.begin(), m.end(), 0.0) == doctest::Approx(1.0));
        for (double v : m) {
          CHECK(v >= 0.0);
          CHECK(v <= 1.0);
        }
      }
    }
  }

  SUBCASE("invalid pattern setups are config errors") {
    CHECK_THROWS_AS(mixture_for_client(0, 99, 2, PartitionPattern::linear(), g), ConfigError);
    CHECK_THROWS_AS(mixture_for_client(0, 100, 3, PartitionPattern::linear(), g), ConfigError);
    CHECK_THROWS_AS(mixture_for_client(0, 100, 2, PartitionPattern::fixed_ratio(30, 60), g),
                    ConfigError);
    CHECK_THROWS_AS(mixture_for_client(0, 100, 3, PartitionPattern::fixed_ratio(10, 90), g),
                    ConfigError);
  }

  SUBCASE("pattern text round trip") {
    CHECK(PartitionPattern::parse("10:90").to_string() == "10:90");
    CHECK(PartitionPattern::parse("linear").to_string() == "linear");
    CHECK(PartitionPattern::parse("random").to_string() == "random");
    CHECK_THROWS_AS(PartitionPattern::parse("bogus"), ConfigError);
  }
}

TEST_CASE("largest remainder rounding") {
  auto g = rng::substream(2, rng::Stream::ClientData);
  for (int rep = 0; rep < 200; ++rep) {
    const int s = rng::uniform_int(g, 1, 6);
    const int n = rng::uniform_int(g, 1, 300);
    std::vector<double> mix(static_cast<size_t>(s));
    double total = 0.0;
    for (auto& v : mix) {
      v = rng::uniform01(g) + 1e-9;
      total += v;
    }
    for (auto& v : mix) v /= total;
    const auto counts = largest_remainder_counts(mix, n);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0) == n);
    for (int i = 0; i < s; ++i)
      CHECK(std::fabs(static_cast<double>(counts[static_cast<size_t>(i)]) / n -
                      mix[static_cast<size_t>(i)]) <= 1.0 / n + 1e-12);
  }
}

TEST_CASE("regression federation") {
  ExperimentConfig cfg;
  cfg.clients = 100;
  cfg.holdout_size = 50;
  cfg.seeds = {3, 4, 5};

  SUBCASE("noiseless points satisfy the generating identity exactly") {
    ExperimentConfig noiseless = cfg;
    noiseless.clients = 10;
    noiseless.select_count = 5;
    noiseless.noise_std = 0.0;
    const auto params = generate_cluster_params(2, noiseless.dim, 10.0, noiseless.seeds.data);
    const auto ds = generate_federation(noiseless, 10.0, PartitionPattern::fixed_ratio(10, 90));
    for (const auto& client : ds.clients)
      for (const auto& p : client.shard)
        CHECK(p.y == vec::dot(p.x, params[static_cast<size_t>(p.source)]));
  }

  SUBCASE("10:90 true mixtures and shard sizes") {
    const auto ds = generate_federation(cfg, 10.0, PartitionPattern::fixed_ratio(10, 90));
    int low = 0, high = 0;
    for (int k = 0; k < cfg.clients; ++k) {
      const auto& client = ds.clients[static_cast<size_t>(k)];
      CHECK(client.shard_size() >= 100);
      CHECK(client.shard_size() <= 200);
      const double tol = 1.0 / client.shard_size() + 1e-12;
      if (std::fabs(ds.true_mixture[static_cast<size_t>(k)][0] - 0.1) <= tol) ++low;
      if (std::fabs(ds.true_mixture[static_cast<size_t>(k)][0] - 0.9) <= tol) ++high;
      int from_counts = 0;
      for (const auto& p : client.shard)
        if (p.source == 0) ++from_counts;
      CHECK(ds.true_mixture[static_cast<size_t>(k)][0] * client.shard_size() ==
            doctest::Approx(from_counts));
    }
    CHECK(low == 50);
    CHECK(high == 50);
  }

  SUBCASE("rows of the true mixture sum to one") {
    const auto ds = generate_federation(cfg, 10.0, PartitionPattern::random());
    for (const auto& row : ds.true_mixture)
      CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("generation is bit-deterministic") {
    const auto a = generate_federation(cfg, 10.0, PartitionPattern::random());
    const auto b = generate_federation(cfg, 10.0, PartitionPattern::random());
    CHECK(dataset_to_json(a) == dataset_to_json(b));
  }
}

TEST_CASE("classification federation") {
  ExperimentConfig cfg;
  cfg.clients = 12;
  cfg.select_count = 6;
  cfg.dim = 6;
  cfg.holdout_size = 600;
  cfg.seeds = {31, 32, 33};
  const int classes = 4;

  SUBCASE("class priors are uniform within multinomial noise") {
    const auto ds = generate_classification_federation(cfg, PartitionPattern::fixed_ratio(10, 90),
                                                       classes, 3.0);
    for (const auto& holdout : ds.holdouts) {
      std::vector<int> freq(classes, 0);
      for (const auto& p : holdout) freq[static_cast<size_t>(std::lround(p.y))]++;
      const double n = static_cast<double>(holdout.size());
      const double expect = n / classes;
      const double sd = std::sqrt(n * (1.0 / classes) * (1.0 - 1.0 / classes));
      for (int c = 0; c < classes; ++c)
        CHECK(std::fabs(freq[static_cast<size_t>(c)] - expect) <= 3.0 * sd);
    }
  }

  SUBCASE("zero separation leaves the distributions indistinguishable") {
    const auto ds = generate_classification_federation(cfg, PartitionPattern::fixed_ratio(10, 90),
                                                       classes, 0.0);
    // Any fixed classifier scores the two holdouts identically in expectation.
    const auto model = LossModel::multinomial_logistic(cfg.dim, classes);
    auto g = rng::substream(77, rng::Stream::Init);
    ModelVector w(static_cast<size_t>(model.param_dim()));
    for (auto& v : w) v = rng::normal01(g);
    const double r0 = batch_risk(model, w, ds.holdouts[0]);
    const double r1 = batch_risk(model, w, ds.holdouts[1]);
    CHECK(std::fabs(r0 - r1) < 0.1);
  }

  SUBCASE("large separation makes cross-cluster accuracy collapse") {
    const auto ds = generate_classification_federation(cfg, PartitionPattern::fixed_ratio(10, 90),
                                                       classes, 12.0);
    const auto model = LossModel::multinomial_logistic(cfg.dim, classes);
    // Train on cluster 0's holdout with plain gradient steps.
    static const CenterSet no_centers;
    ProximalProblem prob{&ds.holdouts[0], &no_centers, {}, 0.0, model};
    SolverConfig solver;
    solver.local_epochs = 30;
    solver.batch_size = 64;
    solver.step_size = 0.05;
    solver.adaptive = true;
    auto g = rng::substream(78, rng::Stream::Solver);
    const ModelVector start(static_cast<size_t>(model.param_dim()), 0.0);
    const auto w = solve_iterative(prob, start, solver, g);
    const double own = accuracy(model, w, ds.holdouts[0]);
    const double cross = accuracy(model, w, ds.holdouts[1]);
    CHECK(own > 0.7);
    CHECK(cross < 1.0 / classes + 0.15);  // near chance
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS(generate_classification_federation(
                        cfg, PartitionPattern::fixed_ratio(10, 90), 1, 1.0),
                    ConfigError);
    CHECK_THROWS_AS(generate_classification_federation(
                        cfg, PartitionPattern::fixed_ratio(10, 90), 3, -1.0),
                    ConfigError);
  }
}
