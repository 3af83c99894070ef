// SPDX-License-Identifier: Apache-2.0
/**
 * @file   preprocess.hpp
 * @brief  Scaling, window averaging, Gaussian-noise augmentation, dataset
 *         splits and batch padding.
 */
#ifndef STROKESENSE_PREPROCESS_HPP
#define STROKESENSE_PREPROCESS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "strokesense/core_types.hpp"

namespace strokesense::preprocess {

/// Per-row min-max scaling to [-1, 1]; constant rows map to 0.
/// Throws std::invalid_argument on non-finite entries or an empty matrix.
Matrix scale_sequence(const Matrix& m);

/// Mean of columns [kM, kM + N) for k = 0 .. floor((T - N) / M).
/// Throws std::invalid_argument("window larger than sequence") when N > T.
Matrix window_average(const Matrix& m, int window, int stride);

/// m + sigma * Z with Z drawn column by column (channels within a column) from
/// Rng(seed).normal(), i.e. Box-Muller over mt19937_64.
Matrix add_gaussian_noise(const Matrix& m, double sigma, std::uint64_t seed);
/// Same draw order as above with a separate sigma per row.
Matrix add_gaussian_noise(const Matrix& m, const Vector& row_sigma, std::uint64_t seed);

struct AugmentConfig {
  std::vector<int> window_sizes{2, 3};
  std::vector<int> strides{1, 2};
  /// Expressed in scaled units: a row spanning [lo, hi] receives noise with
  /// standard deviation noise_sigma * (hi - lo) / 2 before scaling.
  double noise_sigma = 0.05;
  int noise_copies = 2;
  std::uint64_t rng_seed = 0;
  /// Replace each item by its average over (window_sizes[0], strides[0])
  /// instead of adding averaged copies.
  bool in_place = false;

  void validate() const;
};

/**
 * Returns the originals plus one averaged copy per (item, N, M) with N <= T,
 * plus `noise_copies` noisy copies of each original. Copies carry
 * origin = Augmented, an id derived from the parent, and 10 ms timestamps.
 * Sequences stay in physical units; scale_sequence() is applied when samples
 * are fed to the model, so the model-side order is average -> noise -> scale.
 */
Dataset augment(const Dataset& ds, const AugmentConfig& cfg);

enum class Protocol { WriterDisjoint, Pooled, Mixed };

std::string to_string(Protocol p);
Protocol parse_protocol(std::string_view s);

struct SplitSpec {
  Protocol protocol = Protocol::Pooled;
  std::vector<std::string> train_writers;
  std::vector<std::string> test_writers;
  double test_fraction = 0.2;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct Split {
  Dataset train;
  Dataset test;
};

/**
 * Pooled: per-class stratified random test_fraction of the items.
 * WriterDisjoint: train = train_writers' items, test = test_writers' items.
 * Mixed: train_writers' items split 1 - test_fraction / test_fraction per
 * class; test also receives every item of the writers only in test_writers.
 *
 * Augmented items follow their parent to the train side and are dropped when
 * the parent lands in test. Throws DataError("degenerate split") when a side
 * ends up empty.
 */
Split split(const Dataset& ds, const SplitSpec& spec);

/// Stratified hold-out of `fraction` of each class (rounded), seeded.
/// Returns (kept, held_out) item indices in original order.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Dataset& ds, std::span<const std::size_t> indices, double fraction,
    std::uint64_t seed);

/// Copy of `ds` restricted to `indices`, sharing class list and metadata.
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

/// Time-major padded batch. steps[t] is a 6 x B matrix; columns past an
/// item's length are zero.
struct PaddedBatch {
  std::vector<int> lengths;
  std::vector<Matrix> steps;

  int batch_size() const { return static_cast<int>(lengths.size()); }
  int max_len() const { return static_cast<int>(steps.size()); }
  /// Entry (item, timestep, channel) of the B x T_max x 6 tensor.
  double at(int item, int t, int channel) const { return steps[t](channel, item); }
};

/// Pads 6 x T matrices at the end to the longest length.
PaddedBatch pad_batch(std::span<const Matrix> items);

}  // namespace strokesense::preprocess

#endif  // STROKESENSE_PREPROCESS_HPP
