// SPDX-License-Identifier: Apache-2.0
/**
 * @file   config.hpp
 * @brief  Run configuration file (a small TOML subset).
 *
 * Supported syntax: `# comments`, `[section]` headers, `key = value` with
 * dotted keys, and values that are strings ("..."), booleans, numbers or
 * one-line arrays of those. Every key must be known:
 *
 *   seed
 *   augment.enabled  augment.windows  augment.strides  augment.noise_sigma
 *   augment.noise_copies  augment.in_place
 *   split.protocol  split.test_fraction  split.train_writers  split.test_writers
 *   model.lstm1_units  model.lstm2_units  model.dense_units  model.extra_dense
 *   model.hard_sigmoid_everywhere
 *   train.learning_rate  train.rho  train.epsilon  train.batch_size
 *   train.max_epochs  train.patience  train.clip_norm  train.val_fraction
 *   train.max_restarts
 */
#ifndef STROKESENSE_CONFIG_HPP
#define STROKESENSE_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "strokesense/preprocess.hpp"
#include "strokesense/train_eval.hpp"

namespace strokesense::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  preprocess::SplitSpec split;
  /// Augmentation settings live in train.augment_config.
  train_eval::TrainHyper train;
};

/// Applies the settings in `text` on top of `base`. Throws ConfigError with
/// the offending line on syntax errors, unknown keys or invalid values.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace strokesense::config

#endif  // STROKESENSE_CONFIG_HPP
