// SPDX-License-Identifier: Apache-2.0
/**
 * @file   checkpoint.hpp
 * @brief  Versioned binary model checkpoint.
 *
 * Layout (all integers and floats little-endian):
 *
 *   "SSNN"            4-byte magic
 *   u16 version       currently 1
 *   u32 num_classes
 *   u8  flags         bit0 extra dense layer, bit1 hard sigmoid everywhere,
 *                     bit2 optimizer state appended
 *   u32 input_dim, lstm1_units, lstm2_units, dense_units
 *   f64[]             every tensor in ModelParams::tensors() order
 *   [f64 learning_rate, rho, epsilon, f64[] RMSprop accumulators]  if bit2
 */
#ifndef STROKESENSE_NN_CHECKPOINT_HPP
#define STROKESENSE_NN_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "strokesense/nn/optimizer.hpp"

namespace strokesense::nn {

inline constexpr std::uint16_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  std::optional<OptState> opt;
};

std::vector<std::uint8_t> serialize_checkpoint(const ModelParams& params,
                                               const OptState* opt = nullptr);
/// Throws DataError on bad magic, unknown version, truncation, trailing bytes
/// or (when `expected` is given) a configuration mismatch.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes,
                                  const ModelConfig* expected = nullptr);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptState* opt = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const ModelConfig* expected = nullptr);

}  // namespace strokesense::nn

#endif  // STROKESENSE_NN_CHECKPOINT_HPP
