// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "strokesense/nn/optimizer.hpp"
#include "strokesense/rng.hpp"

namespace strokesense::nn {
namespace {

ModelConfig small_config(int classes) {
  ModelConfig c;
  c.num_classes = classes;
  c.lstm1_units = 4;
  c.lstm2_units = 5;
  c.dense_units = 6;
  return c;
}

TrainSample random_sample(Rng& rng, int t, int label, int classes) {
  Matrix m(6, t);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < t; ++j) m(i, j) = rng.uniform(-1, 1);
  return make_train_sample(m, label, classes, "s" + std::to_string(label));
}

TEST(RmsProp, SingleStepFromZeroState) {
  std::vector<double> theta{1.0, -2.0, 0.5};
  const std::vector<double> g{1.0, -0.5, 0.0};
  std::vector<double> v(3, 0.0);
  rmsprop_update(theta, g, v, RmsPropHyper{});
  // v = 0.1 g^2; step = 0.001 g / (sqrt(v) + 1e-8)
  EXPECT_DOUBLE_EQ(v[0], 0.1);
  EXPECT_DOUBLE_EQ(v[1], 0.025);
  EXPECT_DOUBLE_EQ(theta[0], 1.0 - 0.001 * 1.0 / (std::sqrt(0.1) + 1e-8));
  EXPECT_DOUBLE_EQ(theta[1], -2.0 + 0.001 * 0.5 / (std::sqrt(0.025) + 1e-8));
  EXPECT_EQ(theta[2], 0.5);
}

TEST(RmsProp, MatchesScalarRecurrenceOverManySteps) {
  Rng rng(1);
  RmsPropHyper h{0.01, 0.8, 1e-7};
  std::vector<double> theta(5), v(5, 0.0);
  for (auto& t : theta) t = rng.uniform(-1, 1);
  std::vector<double> ot = theta, ov = v;
  for (int step = 0; step < 100; ++step) {
    std::vector<double> g(5);
    for (auto& x : g) x = rng.normal();
    rmsprop_update(theta, g, v, h);
    for (int i = 0; i < 5; ++i) {
      ov[i] = 0.8 * ov[i] + 0.2 * g[i] * g[i];
      ot[i] -= 0.01 * g[i] / (std::sqrt(ov[i]) + 1e-7);
    }
  }
  for (int i = 0; i < 5; ++i) {
    EXPECT_NEAR(theta[i], ot[i], 1e-13);
    EXPECT_NEAR(v[i], ov[i], 1e-13);
  }
}

TEST(RmsProp, ValidatesHyperparameters) {
  EXPECT_THROW((RmsPropHyper{0.0, 0.9, 1e-8}.validate()), std::invalid_argument);
  EXPECT_THROW((RmsPropHyper{0.001, 1.0, 1e-8}.validate()), std::invalid_argument);
  EXPECT_THROW((RmsPropHyper{0.001, 0.9, 0.0}.validate()), std::invalid_argument);
  std::vector<double> a(2), b(3), c(2);
  EXPECT_THROW(rmsprop_update(a, b, c, RmsPropHyper{}), std::invalid_argument);
}

TEST(GlobalNorm, ClipsToTheLimitAndPreservesDirection) {
  ModelParams g = ModelParams::zeros(small_config(3));
  Rng rng(2);
  double sq = 0;
  for (auto t : g.tensors())
    for (double& x : t) {
      x = rng.normal();
      sq += x * x;
    }
  EXPECT_NEAR(global_norm(g), std::sqrt(sq), 1e-9);
  const ModelParams before = g;
  const double norm = clip_global_norm(g, 5.0);
  EXPECT_NEAR(norm, std::sqrt(sq), 1e-9);
  EXPECT_NEAR(global_norm(g), 5.0, 1e-12);
  const auto a = before.tensors();
  const auto b = g.tensors();
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a[k].size(); ++j) EXPECT_NEAR(b[k][j], a[k][j] * 5.0 / norm, 1e-12);

  ModelParams small = ModelParams::zeros(small_config(3));
  small.output.b(0) = 3.0;
  clip_global_norm(small, 5.0);
  EXPECT_EQ(small.output.b(0), 3.0);
  ModelParams off = before;
  clip_global_norm(off, 0.0);
  EXPECT_EQ(off.output.W, before.output.W);
}

TEST(MakeTrainSample, TransposesAndEncodesLabel) {
  Matrix m(6, 3);
  m.setRandom();
  const TrainSample s = make_train_sample(m, 2, 4, "x");
  EXPECT_EQ(s.x, m.transpose());
  EXPECT_EQ(s.y, Vector::Unit(4, 2));
  EXPECT_EQ(s.label(), 2);
  EXPECT_THROW(make_train_sample(m, 4, 4), std::invalid_argument);
}

TEST(TrainStep, UpdateEqualsRmsPropOnTheBatchGradient) {
  Rng rng(3);
  ModelParams p = init_params(small_config(3), 4);
  std::vector<TrainSample> batch{random_sample(rng, 5, 0, 3), random_sample(rng, 8, 2, 3)};
  std::vector<Matrix> items{batch[0].x.transpose(), batch[1].x.transpose()};
  const int labels[] = {0, 2};
  LossAndGrad lg = loss_and_gradient(p, preprocess::pad_batch(items), labels);
  clip_global_norm(lg.grads, 5.0);
  ModelParams want = p;
  OptState ref = make_opt_state(p);
  rmsprop_update(want, lg.grads, ref);

  OptState opt = make_opt_state(p);
  const StepResult r = train_step(p, opt, batch, 5.0);
  EXPECT_NEAR(r.loss, lg.loss, 1e-14);
  const auto a = p.tensors();
  const auto b = want.tensors();
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a[k].size(); ++j) ASSERT_EQ(a[k][j], b[k][j]);
}

TEST(TrainStep, OverfitsATinyBatch) {
  Rng rng(5);
  ModelParams p = init_params(small_config(2), 6);
  std::vector<TrainSample> batch{random_sample(rng, 6, 0, 2), random_sample(rng, 6, 1, 2),
                                 random_sample(rng, 4, 0, 2), random_sample(rng, 9, 1, 2)};
  OptState opt = make_opt_state(p, RmsPropHyper{0.01, 0.9, 1e-8});
  const double first = train_step(p, opt, batch).loss;
  StepResult last;
  for (int i = 0; i < 300; ++i) last = train_step(p, opt, batch);
  EXPECT_LT(last.loss, 0.1 * first);
  EXPECT_EQ(last.correct, 4);
}

TEST(TrainStep, DivergenceLeavesParametersUntouched) {
  Rng rng(7);
  ModelParams p = init_params(small_config(2), 8);
  std::vector<TrainSample> batch{random_sample(rng, 4, 0, 2), random_sample(rng, 4, 1, 2)};
  batch[1].x(2, 3) = std::numeric_limits<double>::quiet_NaN();
  batch[1].id = "bad";
  const ModelParams before = p;
  OptState opt = make_opt_state(p);
  try {
    train_step(p, opt, batch);
    FAIL() << "expected divergence";
  } catch (const DivergedError& e) {
    EXPECT_EQ(e.batch_ids(), (std::vector<std::string>{"s0", "bad"}));
  }
  const auto a = p.tensors();
  const auto b = before.tensors();
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t j = 0; j < a[k].size(); ++j) ASSERT_EQ(a[k][j], b[k][j]);
}

}  // namespace
}  // namespace strokesense::nn
