#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fedsoft/models.hpp"
#include "fedsoft/rng.hpp"

using namespace fedsoft;

namespace {

LabeledPoint make_point(std::mt19937_64& g, const LossModel& model) {
  LabeledPoint p;
  p.x.resize(static_cast<size_t>(model.input_dim));
  for (auto& v : p.x) v = rng::normal01(g);
  if (model.kind == LossModel::Kind::LinearRegression)
    p.y = rng::normal01(g);
  else
    p.y = static_cast<double>(rng::uniform_int(g, 0, model.class_count - 1));
  return p;
}

ModelVector random_params(std::mt19937_64& g, const LossModel& model) {
  ModelVector w(static_cast<size_t>(model.param_dim()));
  for (auto& v : w) v = rng::normal01(g);
  return w;
}

}  // namespace

TEST_CASE("regression point loss basics") {
  const auto model = LossModel::linear_regression(3);
  LabeledPoint p{{1.0, 2.0, -1.0}, 0.0, 0};
  const ModelVector theta{0.5, 0.25, 1.0};
  p.y = vec::dot(p.x, theta);  // noiseless
  CHECK(point_loss(model, theta, p) == doctest::Approx(0.0).epsilon(1e-12));
  const ModelVector zero(3, 0.0);
  CHECK(point_loss(model, zero, p) == doctest::Approx(p.y * p.y));
}

TEST_CASE("logistic uniform logits give log C") {
  const auto model = LossModel::multinomial_logistic(4, 5);
  const ModelVector w(static_cast<size_t>(model.param_dim()), 0.0);
  LabeledPoint p{{0.3, -0.2, 1.0, 0.4}, 2.0, 0};
  CHECK(point_loss(model, w, p) == doctest::Approx(std::log(5.0)));
}

TEST_CASE("regression gradient formula and stationary point") {
  const auto model = LossModel::linear_regression(3);
  auto g = rng::substream(3, rng::Stream::Params);
  const auto p = make_point(g, model);
  const auto w = random_params(g, model);
  const auto grad = point_gradient(model, w, p);
  const double r = vec::dot(w, p.x) - p.y;
  for (int i = 0; i < 3; ++i)
    CHECK(grad[static_cast<size_t>(i)] == doctest::Approx(2.0 * r * p.x[static_cast<size_t>(i)]));

  LabeledPoint fit = p;
  fit.y = vec::dot(w, fit.x);
  CHECK(vec::norm(point_gradient(model, w, fit)) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gradients match central finite differences") {
  auto g = rng::substream(11, rng::Stream::Params);
  for (const LossModel model :
       {LossModel::linear_regression(5), LossModel::multinomial_logistic(4, 3)}) {
    for (int probe = 0; probe < 100; ++probe) {
      const auto p = make_point(g, model);
      const auto w = random_params(g, model);
      ModelVector dir = random_params(g, model);
      const double eps = 1e-5;
      ModelVector wp = w, wm = w;
      vec::axpy(eps, dir, wp);
      vec::axpy(-eps, dir, wm);
      const double fd = (point_loss(model, wp, p) - point_loss(model, wm, p)) / (2 * eps);
      const double an = vec::dot(point_gradient(model, w, p), dir);
      CHECK(std::fabs(fd - an) <= 1e-4 * std::max(1.0, std::fabs(an)));
    }
  }
}

TEST_CASE("batch risk and gradient are means") {
  const auto model = LossModel::linear_regression(4);
  auto g = rng::substream(17, rng::Stream::Params);
  std::vector<LabeledPoint> batch;
  for (int i = 0; i < 9; ++i) batch.push_back(make_point(g, model));
  const auto w = random_params(g, model);

  SUBCASE("singleton equals the point functions") {
    std::vector<LabeledPoint> one{batch[0]};
    CHECK(batch_risk(model, w, one) == doctest::Approx(point_loss(model, w, batch[0])));
    const auto bg = batch_gradient(model, w, one);
    const auto pg = point_gradient(model, w, batch[0]);
    for (size_t i = 0; i < bg.size(); ++i) CHECK(bg[i] == doctest::Approx(pg[i]));
  }

  SUBCASE("duplicating the batch leaves the mean unchanged") {
    std::vector<LabeledPoint> twice = batch;
    twice.insert(twice.end(), batch.begin(), batch.end());
    CHECK(batch_risk(model, w, twice) ==
          doctest::Approx(batch_risk(model, w, batch)).epsilon(1e-12));
  }

  SUBCASE("batch gradient equals the mean of point gradients") {
    const auto bg = batch_gradient(model, w, batch);
    ModelVector mean(w.size(), 0.0);
    for (const auto& p : batch) vec::axpy(1.0 / batch.size(), point_gradient(model, w, p), mean);
    for (size_t i = 0; i < bg.size(); ++i)
      CHECK(std::fabs(bg[i] - mean[i]) <= 1e-12 * std::max(1.0, std::fabs(mean[i])));
  }

  SUBCASE("empty batch is a contract violation") {
    std::vector<LabeledPoint> empty;
    CHECK_THROWS_AS(batch_risk(model, w, empty), ContractViolation);
    CHECK_THROWS_AS(batch_gradient(model, w, empty), ContractViolation);
  }
}

TEST_CASE("both losses are convex in the parameters") {
  auto g = rng::substream(23, rng::Stream::Params);
  for (const LossModel model :
       {LossModel::linear_regression(4), LossModel::multinomial_logistic(3, 4)}) {
    std::vector<LabeledPoint> batch;
    for (int i = 0; i < 12; ++i) batch.push_back(make_point(g, model));
    for (int trial = 0; trial < 50; ++trial) {
      const auto w1 = random_params(g, model);
      const auto w2 = random_params(g, model);
      const double t = rng::uniform01(g);
      ModelVector mid(w1.size());
      for (size_t i = 0; i < mid.size(); ++i) mid[i] = t * w1[i] + (1 - t) * w2[i];
      CHECK(batch_risk(model, mid, batch) <=
            t * batch_risk(model, w1, batch) + (1 - t) * batch_risk(model, w2, batch) + 1e-9);
    }
  }
}

TEST_CASE("dimension mismatches are contract violations") {
  const auto model = LossModel::linear_regression(3);
  LabeledPoint p{{1.0, 2.0}, 0.5, 0};
  const ModelVector w{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(point_loss(model, w, p), ContractViolation);
  const ModelVector bad{1.0};
  LabeledPoint good{{1.0, 2.0, 3.0}, 0.5, 0};
  CHECK_THROWS_AS(point_gradient(model, bad, good), ContractViolation);
}

TEST_CASE("predicted class is the argmax logit") {
  const auto model = LossModel::multinomial_logistic(2, 3);
  // Rows: class weights; class 1 scores highest on x = (1, 0).
  const ModelVector w{0.1, 0.0, 2.0, 0.0, -1.0, 0.0};
  LabeledPoint p{{1.0, 0.0}, 0.0, 0};
  CHECK(predicted_class(model, w, p) == 1);
}
