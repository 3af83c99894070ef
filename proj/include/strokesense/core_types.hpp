// SPDX-License-Identifier: Apache-2.0
/**
 * @file   core_types.hpp
 * @brief  Sensor-sequence data model shared by every stage of the pipeline.
 *
 * A SensorSequence is a list of timestamped six-channel IMU samples. Every
 * numeric consumer goes through to_matrix(), which fixes the row order as
 * [ax, ay, az, gx, gy, gz] (accelerometer in g, gyroscope in deg/s).
 */
#ifndef STROKESENSE_CORE_TYPES_HPP
#define STROKESENSE_CORE_TYPES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace strokesense {

/// Malformed or inconsistent input data (files, streams, datasets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kChannels = 6;
inline constexpr std::int64_t kNominalStepMs = 10;
inline constexpr std::int64_t kStepToleranceMs = 2;
inline constexpr double kAccelLimitG = 16.0;
inline constexpr double kGyroLimitDps = 2000.0;

/// Channel names in canonical row order.
inline constexpr std::string_view kChannelNames[kChannels] = {"ax", "ay", "az",
                                                              "gx", "gy", "gz"};

struct SensorSample {
  std::int64_t t_ms = 0;
  double ax = 0, ay = 0, az = 0;  // g
  double gx = 0, gy = 0, gz = 0;  // deg/s

  double channel(int row) const;
  double& channel(int row);

  bool operator==(const SensorSample&) const = default;
};

struct SensorSequence {
  std::vector<SensorSample> samples;

  std::size_t length() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  std::vector<std::int64_t> timestamps() const;

  bool operator==(const SensorSequence&) const = default;
};

enum class Alphabet { Latin, Georgian };

std::string to_string(Alphabet a);
Alphabet parse_alphabet(std::string_view s);

struct CharacterLabel {
  Alphabet alphabet = Alphabet::Latin;
  int char_index = 0;
  std::string glyph;  // one UTF-8 encoded code point

  bool operator==(const CharacterLabel&) const = default;
};

enum class Origin { Recorded, Synthetic, Augmented };

std::string to_string(Origin o);
Origin parse_origin(std::string_view s);

/// Separator between a parent id and the derivation tag of an augmented copy.
inline constexpr char kLineageSeparator = '~';

struct LabeledSequence {
  std::string id;
  SensorSequence sequence;
  CharacterLabel label;
  std::string writer_id;
  Origin origin = Origin::Synthetic;
  // Set iff origin == Augmented. Always the id prefix before kLineageSeparator.
  std::optional<std::string> parent_id;

  bool operator==(const LabeledSequence&) const = default;
};

/// Builds the id of an augmented child, e.g. "w1_a_003~avg2x1".
std::string derived_id(std::string_view parent_id, std::string_view tag);
/// Recovers the lineage root encoded in an id (the id itself for originals).
std::string lineage_root(std::string_view id);

struct Dataset {
  std::vector<LabeledSequence> items;
  std::vector<CharacterLabel> class_list;
  std::map<std::string, std::string> metadata;

  std::size_t num_classes() const { return class_list.size(); }
  /// Position of `label` in class_list (the model output index).
  int class_index(const CharacterLabel& label) const;
  std::vector<std::string> writers() const;

  bool operator==(const Dataset&) const = default;
};

/// Returns one description per broken rule; empty iff the dataset invariants
/// hold (labels in class_list, unique classes, C >= 2, unique ids, ...).
std::vector<std::string> validate_dataset(const Dataset& ds);

/// Returns one description per broken SensorSequence invariant, each naming
/// the sample index. Non-strict timing allows +/-2 ms jitter per step.
std::vector<std::string> validate_sequence(const SensorSequence& seq,
                                           bool strict_timing);

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// 6xT view, row order [ax, ay, az, gx, gy, gz]. Throws on empty input.
Matrix to_matrix(const SensorSequence& seq);
/// Inverse of to_matrix given the original timestamps.
SensorSequence from_matrix(const Matrix& m, std::span<const std::int64_t> t_ms);
/// from_matrix with nominal 10 ms timestamps starting at 0.
SensorSequence from_matrix(const Matrix& m);

}  // namespace strokesense

#endif  // STROKESENSE_CORE_TYPES_HPP
