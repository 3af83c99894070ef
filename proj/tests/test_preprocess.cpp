// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "strokesense/preprocess.hpp"
#include "test_support.hpp"

namespace strokesense::preprocess {
namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-50, 50);
  return m;
}

TEST(ScaleSequence, MatchesPerRowOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + static_cast<int>(rng.below(40));
    Matrix m = random_matrix(rng, 6, t);
    if (trial % 5 == 0) m.row(2).setConstant(4.0);
    const Matrix s = scale_sequence(m);
    for (int r = 0; r < 6; ++r) {
      double lo = m(r, 0), hi = m(r, 0);
      for (int j = 0; j < t; ++j) lo = std::min(lo, m(r, j)), hi = std::max(hi, m(r, j));
      for (int j = 0; j < t; ++j) {
        const double want = hi == lo ? 0.0 : -1.0 + 2.0 * (m(r, j) - lo) / (hi - lo);
        ASSERT_NEAR(s(r, j), want, 1e-12);
      }
      if (hi > lo) {
        EXPECT_EQ(s.row(r).minCoeff(), -1.0);
        EXPECT_EQ(s.row(r).maxCoeff(), 1.0);
      }
    }
  }
}

TEST(ScaleSequence, RejectsBadInput) {
  EXPECT_THROW(scale_sequence(Matrix(6, 0)), std::invalid_argument);
  Matrix m = Matrix::Zero(6, 3);
  m(1, 1) = std::nan("");
  EXPECT_THROW(scale_sequence(m), std::invalid_argument);
}

TEST(WindowAverage, DocumentedExample) {
  Matrix m(1, 5);
  m << 1, 2, 3, 4, 5;
  Matrix want(1, 4);
  want << 1.5, 2.5, 3.5, 4.5;
  EXPECT_TRUE(window_average(m, 2, 1).isApprox(want));
  Matrix want2(1, 2);
  want2 << 2, 4;
  EXPECT_TRUE(window_average(m, 3, 2).isApprox(want2));
}

TEST(WindowAverage, MatchesNaiveLoopsExhaustively) {
  Rng rng(2);
  for (int t = 1; t <= 20; ++t) {
    const Matrix m = random_matrix(rng, 6, t);
    for (int n = 1; n <= t; ++n) {
      for (int s = 1; s <= 5; ++s) {
        const Matrix out = window_average(m, n, s);
        int count = 0;
        for (int start = 0; start + n <= t; start += s) {
          for (int r = 0; r < 6; ++r) {
            double sum = 0;
            for (int j = start; j < start + n; ++j) sum += m(r, j);
            ASSERT_NEAR(out(r, count), sum / n, 1e-12);
          }
          ++count;
        }
        ASSERT_EQ(out.cols(), count);
      }
    }
    EXPECT_THROW(window_average(m, t + 1, 1), std::invalid_argument);
  }
}

TEST(GaussianNoise, FollowsColumnMajorDrawOrder) {
  Rng rng(3);
  const Matrix m = random_matrix(rng, 6, 9);
  const Matrix noisy = add_gaussian_noise(m, 0.3, 77);
  Rng oracle(77);
  for (int j = 0; j < 9; ++j)
    for (int r = 0; r < 6; ++r) EXPECT_DOUBLE_EQ(noisy(r, j), m(r, j) + 0.3 * oracle.normal());
  EXPECT_EQ(add_gaussian_noise(m, 0.0, 77), m);
  EXPECT_THROW(add_gaussian_noise(m, -1.0, 1), std::invalid_argument);
}

TEST(GaussianNoise, HasRequestedMoments) {
  const Matrix zero = Matrix::Zero(6, 20000);
  const Matrix n = add_gaussian_noise(zero, 0.5, 5);
  const double mean = n.mean();
  const double sd = std::sqrt((n.array() - mean).square().sum() / static_cast<double>(n.size() - 1));
  // 120000 draws: standard error of the mean ~0.0014, of the sd ~0.001.
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sd, 0.5, 0.01);
}

int expected_children(int t, const AugmentConfig& cfg) {
  int n = cfg.noise_copies;
  for (int w : cfg.window_sizes)
    for (int s : cfg.strides) n += (w <= t) ? 1 : 0;
  return n;
}
TEST(Augment, CountsIdsAndLineage) {
  Dataset ds = testing::random_dataset(3, 2, 2, 4, 1, 4);  // short items exercise N > T
  AugmentConfig cfg;
  cfg.rng_seed = 9;
  const Dataset out = augment(ds, cfg);
  std::size_t want = ds.items.size();
  for (const auto& item : ds.items) want += static_cast<std::size_t>(expected_children(static_cast<int>(item.sequence.length()), cfg));
  ASSERT_EQ(out.items.size(), want);
  EXPECT_EQ(out.class_list, ds.class_list);

  std::map<std::string, const LabeledSequence*> originals;
  for (const auto& item : ds.items) originals[item.id] = &item;
  std::set<std::string> ids;
  for (const auto& item : out.items) {
    EXPECT_TRUE(ids.insert(item.id).second) << item.id;
    if (item.origin != Origin::Augmented) {
      EXPECT_EQ(item, *originals.at(item.id));
      continue;
    }
    ASSERT_TRUE(item.parent_id.has_value());
    EXPECT_EQ(*item.parent_id, lineage_root(item.id));
    const auto& parent = *originals.at(*item.parent_id);
    EXPECT_EQ(item.label, parent.label);
    EXPECT_EQ(item.writer_id, parent.writer_id);
    EXPECT_EQ(item.id.rfind(parent.id + kLineageSeparator, 0), 0u);
    for (std::size_t t = 0; t < item.sequence.length(); ++t)
      EXPECT_EQ(item.sequence.samples[t].t_ms, static_cast<std::int64_t>(10 * t));
  }
  EXPECT_TRUE(validate_dataset(out).empty());
}

TEST(Augment, AveragedCopiesEqualWindowAverage) {
  const Dataset ds = testing::random_dataset(2, 1, 1, 5, 20, 20);
  AugmentConfig cfg;
  cfg.noise_copies = 0;
  const Dataset out = augment(ds, cfg);
  for (const auto& item : out.items) {
    if (item.origin != Origin::Augmented) continue;
    const auto& parent = ds.items[item.parent_id == ds.items[0].id ? 0 : 1];
    const std::string tag = item.id.substr(item.id.find(kLineageSeparator) + 1);
    int n = 0, s = 0;
    ASSERT_EQ(std::sscanf(tag.c_str(), "avg%dx%d", &n, &s), 2) << tag;
    const Matrix want = window_average(to_matrix(parent.sequence), n, s);
    EXPECT_TRUE(to_matrix(item.sequence).isApprox(want, 1e-14));
  }
}

TEST(Augment, NoiseIsScaledToEachChannelRange) {
  // A single long item: per-row residual sd should be sigma * range / 2.
  Dataset ds = testing::random_dataset(2, 1, 1, 6, 4000, 4000);
  AugmentConfig cfg;
  cfg.window_sizes.clear();
  cfg.noise_copies = 1;
  cfg.noise_sigma = 0.1;
  const Dataset out = augment(ds, cfg);
  for (const auto& parent : ds.items) {
    const Matrix base = to_matrix(parent.sequence);
    const auto child = std::find_if(out.items.begin(), out.items.end(), [&](const LabeledSequence& it) {
      return it.parent_id == parent.id;
    });
    ASSERT_NE(child, out.items.end());
    const Matrix diff = to_matrix(child->sequence) - base;
    for (int r = 0; r < 6; ++r) {
      const double range = base.row(r).maxCoeff() - base.row(r).minCoeff();
      const double sd = std::sqrt(diff.row(r).squaredNorm() / static_cast<double>(diff.cols()));
      EXPECT_NEAR(sd / (0.1 * range / 2.0), 1.0, 0.05);
    }
  }
}

TEST(Augment, DeterministicAndSeedSensitive) {
  const Dataset ds = testing::random_dataset(2, 2, 2, 7);
  AugmentConfig a;
  a.rng_seed = 1;
  AugmentConfig b = a;
  b.rng_seed = 2;
  EXPECT_EQ(augment(ds, a), augment(ds, a));
  EXPECT_NE(augment(ds, a), augment(ds, b));
}

TEST(Augment, InPlaceReplacesItems) {
  const Dataset ds = testing::random_dataset(2, 1, 2, 8, 10, 10);
  AugmentConfig cfg;
  cfg.in_place = true;
  cfg.noise_copies = 0;
  const Dataset out = augment(ds, cfg);
  ASSERT_EQ(out.items.size(), ds.items.size());
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    EXPECT_EQ(out.items[i].id, ds.items[i].id);
    EXPECT_EQ(out.items[i].sequence.length(), 9u);  // N=2, M=1
  }
}

TEST(Augment, RejectsBadConfig) {
  const Dataset ds = testing::random_dataset(2, 1, 1, 8);
  AugmentConfig cfg;
  cfg.window_sizes = {0};
  EXPECT_THROW(augment(ds, cfg), std::invalid_argument);
  cfg = {};
  cfg.noise_copies = -1;
  EXPECT_THROW(augment(ds, cfg), std::invalid_argument);
}

std::map<int, int> class_counts(const Dataset& ds) {
  std::map<int, int> c;
  for (const auto& item : ds.items) ++c[ds.class_index(item.label)];
  return c;
}

TEST(Split, PooledIsStratifiedDisjointAndComplete) {
  const Dataset ds = testing::random_dataset(4, 3, 5, 10);  // 15 per class
  SplitSpec spec;
  spec.test_fraction = 0.2;
  spec.rng_seed = 3;
  const Split s = split(ds, spec);
  for (const auto& [cls, n] : class_counts(s.test)) EXPECT_EQ(n, 3) << cls;
  for (const auto& [cls, n] : class_counts(s.train)) EXPECT_EQ(n, 12) << cls;
  std::set<std::string> seen;
  for (const auto& item : s.train.items) seen.insert(item.id);
  for (const auto& item : s.test.items) EXPECT_TRUE(seen.insert(item.id).second);
  EXPECT_EQ(seen.size(), ds.items.size());
  EXPECT_EQ(split(ds, spec).test, s.test);
  spec.rng_seed = 4;
  EXPECT_NE(split(ds, spec).test, s.test);
}

TEST(Split, AugmentedChildrenFollowParentsToTrain) {
  const Dataset base = testing::random_dataset(3, 2, 4, 11);
  AugmentConfig cfg;
  const Dataset ds = augment(base, cfg);
  SplitSpec spec;
  spec.rng_seed = 5;
  const Split s = split(ds, spec);
  std::set<std::string> test_ids, train_roots;
  for (const auto& item : s.test.items) {
    EXPECT_NE(item.origin, Origin::Augmented);
    test_ids.insert(item.id);
  }
  for (const auto& item : s.train.items) {
    EXPECT_FALSE(test_ids.count(lineage_root(item.id))) << item.id;
    train_roots.insert(lineage_root(item.id));
  }
  // Every child of a train root is present.
  std::size_t want = 0;
  for (const auto& item : ds.items) want += train_roots.count(lineage_root(item.id));
  EXPECT_EQ(s.train.items.size(), want);
}

TEST(Split, WriterDisjointUsesWriterSets) {
  const Dataset ds = testing::random_dataset(2, 3, 2, 12);
  SplitSpec spec;
  spec.protocol = Protocol::WriterDisjoint;
  spec.train_writers = {"w1", "w2"};
  spec.test_writers = {"w3"};
  const Split s = split(ds, spec);
  for (const auto& item : s.train.items) EXPECT_NE(item.writer_id, "w3");
  for (const auto& item : s.test.items) EXPECT_EQ(item.writer_id, "w3");
  EXPECT_EQ(s.train.items.size(), 8u);
  EXPECT_EQ(s.test.items.size(), 4u);
}

TEST(Split, MixedHoldsOutKnownWritersAndAddsUnknownOnes) {
  const Dataset ds = testing::random_dataset(2, 3, 10, 13);
  SplitSpec spec;
  spec.protocol = Protocol::Mixed;
  spec.train_writers = {"w1", "w2"};
  spec.test_writers = {"w1", "w2", "w3"};
  spec.test_fraction = 0.3;
  const Split s = split(ds, spec);
  int known_test = 0, unknown_test = 0;
  for (const auto& item : s.test.items) (item.writer_id == "w3" ? unknown_test : known_test)++;
  for (const auto& item : s.train.items) EXPECT_NE(item.writer_id, "w3");
  EXPECT_EQ(unknown_test, 20);
  EXPECT_EQ(known_test, 12);  // 20 per class from w1+w2, 30% each
  EXPECT_EQ(s.train.items.size(), 28u);
}

TEST(Split, ValidationAndDegenerateCases) {
  const Dataset ds = testing::random_dataset(2, 2, 2, 14);
  SplitSpec spec;
  spec.test_fraction = 1.0;
  EXPECT_THROW(split(ds, spec), std::invalid_argument);
  spec = {};
  spec.protocol = Protocol::WriterDisjoint;
  spec.train_writers = {"w1"};
  spec.test_writers = {"w1"};
  EXPECT_THROW(split(ds, spec), std::invalid_argument);
  spec.test_writers = {"w9"};
  EXPECT_THROW(split(ds, spec), DataError);
  spec = {};
  spec.protocol = Protocol::Mixed;
  spec.train_writers = {"w1"};
  spec.test_writers = {"w1"};
  EXPECT_THROW(split(ds, spec), std::invalid_argument);
  spec = {};
  spec.test_fraction = 0.01;  // rounds to zero held-out items
  EXPECT_THROW(split(ds, spec), DataError);
  EXPECT_EQ(parse_protocol(to_string(Protocol::Mixed)), Protocol::Mixed);
  EXPECT_THROW(parse_protocol("random"), std::invalid_argument);
}

TEST(PadBatch, ZeroPadsAtTheEnd) {
  Rng rng(15);
  std::vector<Matrix> items{random_matrix(rng, 6, 3), random_matrix(rng, 6, 7), random_matrix(rng, 6, 1)};
  const PaddedBatch b = pad_batch(items);
  EXPECT_EQ(b.batch_size(), 3);
  EXPECT_EQ(b.max_len(), 7);
  EXPECT_EQ(b.lengths, (std::vector<int>{3, 7, 1}));
  for (int i = 0; i < 3; ++i)
    for (int t = 0; t < 7; ++t)
      for (int c = 0; c < 6; ++c)
        EXPECT_EQ(b.at(i, t, c), t < items[i].cols() ? items[i](c, t) : 0.0);
  EXPECT_THROW(pad_batch(std::vector<Matrix>{}), std::invalid_argument);
  EXPECT_THROW(pad_batch(std::vector<Matrix>{Matrix(5, 2)}), std::invalid_argument);
}

}  // namespace
}  // namespace strokesense::preprocess
