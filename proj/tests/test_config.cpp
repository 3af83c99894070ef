// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>

#include "strokesense/config.hpp"
#include "test_support.hpp"

namespace strokesense::config {
namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(ParseConfig, EveryKnownKey) {
  const RunConfig c = parse_config(R"(
# run settings
seed = 42

[augment]
enabled = false
windows = [2, 4]
strides = [1]
noise_sigma = 0.1
noise_copies = 3
in_place = true

[split]
protocol = "mixed"
test_fraction = 0.3
train_writers = ["w1", "w2"]
test_writers = ["w1", "w2", "w3"]

[model]
lstm1_units = 16
lstm2_units = 24
dense_units = 32
extra_dense = true
hard_sigmoid_everywhere = true

[train]
learning_rate = 2e-3
rho = 0.95
epsilon = 1e-7
batch_size = 64
max_epochs = 50
patience = 5
clip_norm = 1.5
val_fraction = 0.2
max_restarts = 1
)");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_FALSE(c.train.augment);
  EXPECT_EQ(c.train.augment_config.window_sizes, (std::vector<int>{2, 4}));
  EXPECT_EQ(c.train.augment_config.strides, (std::vector<int>{1}));
  EXPECT_EQ(c.train.augment_config.noise_sigma, 0.1);
  EXPECT_EQ(c.train.augment_config.noise_copies, 3);
  EXPECT_TRUE(c.train.augment_config.in_place);
  EXPECT_EQ(c.split.protocol, preprocess::Protocol::Mixed);
  EXPECT_EQ(c.split.test_fraction, 0.3);
  EXPECT_EQ(c.split.train_writers, (std::vector<std::string>{"w1", "w2"}));
  EXPECT_EQ(c.split.test_writers.size(), 3u);
  EXPECT_EQ(c.train.model.lstm1_units, 16);
  EXPECT_EQ(c.train.model.lstm2_units, 24);
  EXPECT_EQ(c.train.model.dense_units, 32);
  EXPECT_TRUE(c.train.model.extra_dense);
  EXPECT_TRUE(c.train.model.hard_sigmoid_everywhere);
  EXPECT_EQ(c.train.optimizer.learning_rate, 2e-3);
  EXPECT_EQ(c.train.optimizer.rho, 0.95);
  EXPECT_EQ(c.train.optimizer.epsilon, 1e-7);
  EXPECT_EQ(c.train.batch_size, 64);
  EXPECT_EQ(c.train.max_epochs, 50);
  EXPECT_EQ(c.train.patience, 5);
  EXPECT_EQ(c.train.clip_norm, 1.5);
  EXPECT_EQ(c.train.val_fraction, 0.2);
  EXPECT_EQ(c.train.max_restarts, 1);
}

TEST(ParseConfig, DottedKeysAndLayering) {
  RunConfig base;
  base.train.max_epochs = 7;
  base.seed = 1;
  const RunConfig c = parse_config("train.patience = 3  # inline comment\nmodel.dense_units=10\n", base);
  EXPECT_EQ(c.train.patience, 3);
  EXPECT_EQ(c.train.model.dense_units, 10);
  EXPECT_EQ(c.train.max_epochs, 7);
  EXPECT_EQ(c.seed, 1u);
  const RunConfig defaults = parse_config("");
  EXPECT_FALSE(defaults.seed.has_value());
  EXPECT_EQ(defaults.train.max_epochs, train_eval::TrainHyper{}.max_epochs);
}

TEST(ParseConfig, StringsMayContainHashes) {
  const RunConfig c = parse_config("split.train_writers = [\"w#1\"]\n");
  EXPECT_EQ(c.split.train_writers, (std::vector<std::string>{"w#1"}));
}

TEST(ParseConfig, ErrorsNameTheLine) {
  EXPECT_NE(error_of("seed = 1\nbogus = 2\n").find("unknown key 'bogus' (config line 2)"), std::string::npos);
  EXPECT_NE(error_of("[train]\nbatch_size = \"x\"\n").find("config line 2"), std::string::npos);
  EXPECT_NE(error_of("[train\n").find("malformed section header"), std::string::npos);
  EXPECT_NE(error_of("seed\n").find("expected key = value"), std::string::npos);
  EXPECT_NE(error_of("train.batch_size = 2.5\n").find("expected an integer"), std::string::npos);
  EXPECT_NE(error_of("augment.windows = [1, 2\n").find("unterminated array"), std::string::npos);
  EXPECT_NE(error_of("augment.enabled = yes\n").find("cannot parse value 'yes'"), std::string::npos);
  EXPECT_NE(error_of("augment.enabled = 1\n").find("true or false"), std::string::npos);
  EXPECT_NE(error_of("seed = -1\n").find("non-negative"), std::string::npos);
  EXPECT_NE(error_of("split.protocol = \"random\"\n").find("unknown protocol"), std::string::npos);
}

TEST(ParseConfig, RejectsInvalidValues) {
  EXPECT_NE(error_of("train.batch_size = 0\n").find("invalid configuration"), std::string::npos);
  EXPECT_NE(error_of("train.learning_rate = -1\n").find("invalid configuration"), std::string::npos);
  EXPECT_NE(error_of("split.test_fraction = 1.5\n").find("invalid configuration"), std::string::npos);
}

TEST(LoadConfig, ReadsFiles) {
  testing::TempDir dir("cfg");
  std::ofstream(dir / "run.toml") << "seed = 9\n[train]\nmax_epochs = 4\n";
  const RunConfig c = load_config(dir / "run.toml");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.train.max_epochs, 4);
  EXPECT_THROW(load_config(dir / "none.toml"), ConfigError);
}

}  // namespace
}  // namespace strokesense::config
