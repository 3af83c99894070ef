// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "strokesense/train_eval.hpp"
#include "test_support.hpp"

namespace strokesense::train_eval {
namespace {

// Class c is a ramp in channel c % 6 whose direction depends on c / 6, plus
// noise; per-row scaling keeps the shape, so the task is learnable.
Dataset ramp_dataset(int classes, int writers, int per, std::uint64_t seed) {
  Dataset ds = testing::random_dataset(classes, writers, per, seed, 10, 16);
  Rng rng(seed + 1);
  for (auto& item : ds.items) {
    const int c = ds.class_index(item.label);
    const auto t = static_cast<double>(item.sequence.length());
    for (std::size_t i = 0; i < item.sequence.length(); ++i) {
      auto& s = item.sequence.samples[i];
      for (int ch = 0; ch < kChannels; ++ch) s.channel(ch) = 0.1 * rng.normal();
      const double ramp = static_cast<double>(i) / t;
      s.channel(c % 6) += (c / 6 == 0 ? ramp : 1.0 - ramp) * 3.0;
    }
  }
  return ds;
}

TrainHyper quick_hyper() {
  TrainHyper h;
  h.model.lstm1_units = 8;
  h.model.lstm2_units = 8;
  h.model.dense_units = 8;
  h.optimizer.learning_rate = 0.01;
  h.max_epochs = 25;
  h.patience = 8;
  h.batch_size = 16;
  h.augment = false;
  return h;
}

TEST(MakeReport, ConfusionAccuracyAndRecall) {
  std::vector<CharacterLabel> classes{testing::latin(0), testing::latin(1), testing::latin(2)};
  const std::vector<int> truth{0, 0, 0, 1, 1, 2, 2, 2, 2};
  const std::vector<int> pred{0, 1, 0, 1, 1, 2, 0, 2, 2};
  const EvalReport r = make_report(classes, truth, pred);
  CountMatrix want = CountMatrix::Zero(3, 3);
  for (std::size_t i = 0; i < truth.size(); ++i) ++want(truth[i], pred[i]);
  EXPECT_EQ(r.confusion, want);
  EXPECT_EQ(r.n_test, 9);
  EXPECT_DOUBLE_EQ(r.accuracy, 7.0 / 9.0);
  EXPECT_DOUBLE_EQ(r.per_class_accuracy[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class_accuracy[1], 1.0);
  EXPECT_DOUBLE_EQ(r.per_class_accuracy[2], 0.75);
  EXPECT_EQ(r.confusion.sum(), r.n_test);
  EXPECT_DOUBLE_EQ(static_cast<double>(r.confusion.trace()) / 9.0, r.accuracy);
}

TEST(MakeReport, AbsentClassHasZeroRecallAndBadInputThrows) {
  std::vector<CharacterLabel> classes{testing::latin(0), testing::latin(1)};
  const EvalReport r = make_report(classes, {0, 0}, {0, 1});
  EXPECT_EQ(r.per_class_accuracy[1], 0.0);
  EXPECT_THROW(make_report(classes, {0}, {0, 1}), std::invalid_argument);
  EXPECT_THROW(make_report(classes, {2}, {0}), std::invalid_argument);
}

TEST(Summarize, SampleStandardDeviation) {
  const SweepPoint p = summarize(4, {0.5, 0.7, 0.9});
  EXPECT_EQ(p.x, 4);
  EXPECT_EQ(p.n_repeats, 3);
  EXPECT_NEAR(p.mean_accuracy, 0.7, 1e-15);
  EXPECT_NEAR(p.std_accuracy, 0.2, 1e-15);
  EXPECT_EQ(summarize(1, {0.3}).std_accuracy, 0.0);
  EXPECT_THROW(summarize(1, {}), std::invalid_argument);
}

// Textbook definition for distinct values: 1 - 6 sum d^2 / (n (n^2 - 1)).
TEST(Spearman, MatchesClosedFormWithoutTies) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 3 + static_cast<int>(rng.below(20));
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) x[i] = rng.uniform(), y[i] = rng.uniform();
    auto rank = [&](const std::vector<double>& v) {
      std::vector<double> r(n);
      for (int i = 0; i < n; ++i) r[i] = static_cast<double>(std::count_if(v.begin(), v.end(), [&](double o) { return o < v[i]; }));
      return r;
    };
    const auto rx = rank(x), ry = rank(y);
    double d2 = 0;
    for (int i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    EXPECT_NEAR(spearman(x, y), 1.0 - 6.0 * d2 / (n * (static_cast<double>(n) * n - 1)), 1e-12);
  }
}

TEST(Spearman, TiesAndDegenerateInputs) {
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0, 1e-15);
  EXPECT_NEAR(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_EQ(spearman({1, 2, 3}, {5, 5, 5}), 0.0);
  // x ranks 1, 2.5, 2.5, 4 against y ranks 1..4: Pearson on ranks.
  const double rx[] = {1, 2.5, 2.5, 4}, ry[] = {1, 2, 3, 4};
  double mx = 2.5, my = 2.5, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 4; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  EXPECT_NEAR(spearman({1, 2, 2, 3}, {1, 2, 3, 4}), sxy / std::sqrt(sxx * syy), 1e-15);
  EXPECT_THROW(spearman({1, 2}, {1}), std::invalid_argument);
}

TEST(TrainHyper, Validation) {
  TrainHyper h;
  EXPECT_NO_THROW(h.validate());
  h.batch_size = 0;
  EXPECT_THROW(h.validate(), std::invalid_argument);
  h = {};
  h.val_fraction = 1.0;
  EXPECT_THROW(h.validate(), std::invalid_argument);
  h = {};
  h.optimizer.rho = 1.5;
  EXPECT_THROW(h.validate(), std::invalid_argument);
}

TEST(Featurize, ScalesThenTransposes) {
  Rng rng(2);
  const SensorSequence seq = testing::random_sequence(rng, 9);
  const Matrix f = featurize(seq);
  EXPECT_EQ(f.rows(), 9);
  EXPECT_EQ(f.cols(), 6);
  EXPECT_EQ(f, preprocess::scale_sequence(to_matrix(seq)).transpose());
}

TEST(TrainModel, LearnsASeparableTaskAndKeepsTheBestEpoch) {
  const Dataset ds = ramp_dataset(4, 2, 12, 3);
  const auto [kept, held] = preprocess::stratified_holdout(ds, [&] {
    std::vector<std::size_t> all(ds.items.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }(), 0.25, 4);
  const Dataset train = preprocess::subset(ds, kept), val = preprocess::subset(ds, held);
  const TrainResult r = train_model(train, val, quick_hyper(), 5);
  ASSERT_FALSE(r.history.empty());
  double best = -1;
  int first_best = 0;
  for (std::size_t e = 0; e < r.history.size(); ++e) {
    if (r.history[e].val_accuracy > best) best = r.history[e].val_accuracy, first_best = static_cast<int>(e) + 1;
  }
  EXPECT_EQ(r.best_epoch, first_best);
  EXPECT_GE(best, 0.9);
  // The returned parameters are the best epoch's, not the last one's.
  const auto pred = predict(r.params, val);
  int hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == val.class_index(val.items[i].label);
  EXPECT_DOUBLE_EQ(static_cast<double>(hits) / static_cast<double>(pred.size()), best);
  // Early stopping: training ended within `patience` epochs of the best one.
  EXPECT_LE(static_cast<int>(r.history.size()), std::min(quick_hyper().max_epochs, r.best_epoch + quick_hyper().patience));
  EXPECT_EQ(r.restarts, 0);
}

TEST(TrainModel, DeterministicForAFixedSeed) {
  const Dataset ds = ramp_dataset(3, 1, 6, 6);
  TrainHyper h = quick_hyper();
  h.max_epochs = 3;
  const TrainResult a = train_model(ds, Dataset{}, h, 7);
  const TrainResult b = train_model(ds, Dataset{}, h, 7);
  EXPECT_EQ(a.params.output.W, b.params.output.W);
  EXPECT_EQ(a.params.lstm1.U, b.params.lstm1.U);
  const TrainResult c = train_model(ds, Dataset{}, h, 8);
  EXPECT_NE(a.params.lstm1.U, c.params.lstm1.U);
}

TEST(TrainModel, RestartsAndThenFailsOnPersistentDivergence) {
  // An absurd step size overflows the weights on every attempt.
  const Dataset ds = ramp_dataset(2, 1, 3, 9);
  TrainHyper h = quick_hyper();
  h.optimizer.learning_rate = 1e300;
  h.max_restarts = 2;
  EXPECT_THROW(train_model(ds, Dataset{}, h, 1), TrainingFailed);
}

TEST(Evaluate, RejectsClassMismatchAndEmptyTest) {
  const Dataset ds = ramp_dataset(3, 1, 2, 10);
  nn::ModelConfig cfg = quick_hyper().model;
  cfg.num_classes = 4;
  const nn::ModelParams p = nn::init_params(cfg, 1);
  EXPECT_THROW(evaluate(p, ds), DataError);
  Dataset empty = ds;
  empty.items.clear();
  EXPECT_THROW(evaluate(p, empty), std::invalid_argument);
}

TEST(Fit, LineageAuditCatchesForbiddenRoots) {
  const Dataset ds = ramp_dataset(2, 1, 6, 11);
  TrainHyper h = quick_hyper();
  h.max_epochs = 1;
  h.augment = true;
  EXPECT_THROW(fit(ds, h, 1, 0, {ds.items[3].id}), std::logic_error);
  EXPECT_NO_THROW(fit(ds, h, 1, 0, {"not-there"}));
}

TEST(Fit, PerClassLimitNeedsEnoughItems) {
  const Dataset ds = ramp_dataset(2, 1, 4, 12);
  TrainHyper h = quick_hyper();
  h.max_epochs = 1;
  EXPECT_THROW(fit(ds, h, 1, 5), DataError);
}

TEST(RunProtocol, PooledReportIsConsistentAndReproducible) {
  const Dataset ds = ramp_dataset(4, 3, 6, 13);
  preprocess::SplitSpec spec;
  spec.test_fraction = 0.25;
  spec.rng_seed = 2;
  TrainHyper h = quick_hyper();
  h.augment = true;
  h.augment_config.noise_copies = 1;
  h.max_epochs = 6;
  const EvalReport a = run_protocol(ds, spec, h, 3);
  const EvalReport b = run_protocol(ds, spec, h, 3);
  EXPECT_EQ(a.n_test, 4 * std::lround(0.25 * 18));  // 18 per class
  EXPECT_EQ(a.confusion, b.confusion);
  EXPECT_EQ(a.confusion.sum(), a.n_test);
  EXPECT_EQ(a.class_list, ds.class_list);
  EXPECT_FALSE(a.train_history.empty());
}

TEST(RunProtocol, WriterDisjointTestsOnlyUnseenWriters) {
  const Dataset ds = ramp_dataset(3, 3, 4, 14);
  preprocess::SplitSpec spec;
  spec.protocol = preprocess::Protocol::WriterDisjoint;
  spec.train_writers = {"w1", "w2"};
  spec.test_writers = {"w3"};
  TrainHyper h = quick_hyper();
  h.max_epochs = 2;
  EXPECT_EQ(run_protocol(ds, spec, h, 1).n_test, 12);
}

TEST(Sweeps, ShapesAndNesting) {
  const Dataset ds = ramp_dataset(5, 2, 10, 15);
  TrainHyper h = quick_hyper();
  h.max_epochs = 2;
  const auto cls = sweep_classes(ds, 4, {2, 5}, 2, h, 0.25, 1);
  ASSERT_EQ(cls.size(), 2u);
  EXPECT_EQ(cls[0].x, 2);
  EXPECT_EQ(cls[1].n_repeats, 2);
  EXPECT_THROW(sweep_classes(ds, 4, {6}, 1, h, 0.25, 1), DataError);
  const auto size = sweep_train_size(ds, {2, 6}, 1, h, 0.25, 1);
  ASSERT_EQ(size.size(), 2u);
  EXPECT_EQ(size[1].x, 6);
  EXPECT_THROW(sweep_train_size(ds, {0}, 1, h, 0.25, 1), std::invalid_argument);
}

}  // namespace
}  // namespace strokesense::train_eval
