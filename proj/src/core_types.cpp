// SPDX-License-Identifier: Apache-2.0
#include "strokesense/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace strokesense {

double SensorSample::channel(int row) const {
  switch (row) {
    case 0: return ax;
    case 1: return ay;
    case 2: return az;
    case 3: return gx;
    case 4: return gy;
    case 5: return gz;
  }
  throw std::out_of_range("channel row out of range");
}

double& SensorSample::channel(int row) {
  switch (row) {
    case 0: return ax;
    case 1: return ay;
    case 2: return az;
    case 3: return gx;
    case 4: return gy;
    case 5: return gz;
  }
  throw std::out_of_range("channel row out of range");
}

std::vector<std::int64_t> SensorSequence::timestamps() const {
  std::vector<std::int64_t> t;
  t.reserve(samples.size());
  for (const auto& s : samples) t.push_back(s.t_ms);
  return t;
}

std::string to_string(Alphabet a) {
  return a == Alphabet::Latin ? "latin" : "georgian";
}

Alphabet parse_alphabet(std::string_view s) {
  if (s == "latin") return Alphabet::Latin;
  if (s == "georgian") return Alphabet::Georgian;
  throw DataError("unknown alphabet '" + std::string(s) + "'");
}

std::string to_string(Origin o) {
  switch (o) {
    case Origin::Recorded: return "recorded";
    case Origin::Synthetic: return "synthetic";
    case Origin::Augmented: return "augmented";
  }
  return "?";
}

Origin parse_origin(std::string_view s) {
  if (s == "recorded") return Origin::Recorded;
  if (s == "synthetic") return Origin::Synthetic;
  if (s == "augmented") return Origin::Augmented;
  throw DataError("unknown origin '" + std::string(s) + "'");
}

std::string derived_id(std::string_view parent_id, std::string_view tag) {
  std::string id(lineage_root(parent_id));
  id += kLineageSeparator;
  id += tag;
  return id;
}

std::string lineage_root(std::string_view id) {
  return std::string(id.substr(0, id.find(kLineageSeparator)));
}

int Dataset::class_index(const CharacterLabel& label) const {
  auto it = std::find(class_list.begin(), class_list.end(), label);
  return it == class_list.end() ? -1 : static_cast<int>(it - class_list.begin());
}

std::vector<std::string> Dataset::writers() const {
  std::vector<std::string> out;
  for (const auto& item : items) {
    if (std::find(out.begin(), out.end(), item.writer_id) == out.end()) {
      out.push_back(item.writer_id);
    }
  }
  return out;
}

std::vector<std::string> validate_dataset(const Dataset& ds) {
  std::vector<std::string> errors;
  if (ds.class_list.size() < 2) errors.push_back("fewer than 2 classes");
  for (std::size_t i = 0; i < ds.class_list.size(); ++i) {
    if (ds.class_list[i].glyph.empty()) {
      errors.push_back("empty glyph in class " + std::to_string(i));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (ds.class_list[i] == ds.class_list[j]) {
        errors.push_back("duplicate class " + ds.class_list[i].glyph);
      }
    }
  }
  std::set<std::string> ids;
  for (const auto& item : ds.items) {
    if (!ids.insert(item.id).second) errors.push_back("duplicate id " + item.id);
    if (item.writer_id.empty()) errors.push_back("empty writer id on " + item.id);
    if (ds.class_index(item.label) < 0) {
      errors.push_back("label of " + item.id + " not in class list");
    }
    if (item.origin == Origin::Augmented && !item.parent_id) {
      errors.push_back("augmented item " + item.id + " has no parent");
    }
  }
  return errors;
}

std::vector<std::string> validate_sequence(const SensorSequence& seq,
                                           bool strict_timing) {
  std::vector<std::string> v;
  if (seq.empty()) {
    v.emplace_back("empty sequence");
    return v;
  }
  for (std::size_t i = 0; i < seq.samples.size(); ++i) {
    const auto& s = seq.samples[i];
    const auto at = " at index " + std::to_string(i);
    if (s.t_ms < 0) v.push_back("negative timestamp" + at);
    for (int r = 0; r < kChannels; ++r) {
      const double x = s.channel(r);
      const double limit = r < 3 ? kAccelLimitG : kGyroLimitDps;
      if (!std::isfinite(x)) {
        v.push_back("non-finite channel " + std::string(kChannelNames[r]) + at);
      } else if (std::abs(x) > limit) {
        v.push_back("channel " + std::string(kChannelNames[r]) +
                    " out of range" + at);
      }
    }
    if (i == 0) continue;
    const std::int64_t step = s.t_ms - seq.samples[i - 1].t_ms;
    if (step <= 0) {
      v.push_back("non-increasing timestamp" + at);
    } else if (strict_timing ? step != kNominalStepMs
                             : std::abs(step - kNominalStepMs) > kStepToleranceMs) {
      v.push_back("timestep of " + std::to_string(step) + " ms" + at);
    }
  }
  return v;
}

Matrix to_matrix(const SensorSequence& seq) {
  if (seq.empty()) throw std::invalid_argument("empty sequence");
  Matrix m(kChannels, static_cast<Eigen::Index>(seq.length()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const auto& s = seq.samples[static_cast<std::size_t>(j)];
    for (int r = 0; r < kChannels; ++r) m(r, j) = s.channel(r);
  }
  return m;
}

SensorSequence from_matrix(const Matrix& m, std::span<const std::int64_t> t_ms) {
  if (m.rows() != kChannels) throw std::invalid_argument("matrix must have 6 rows");
  if (static_cast<std::size_t>(m.cols()) != t_ms.size()) {
    throw std::invalid_argument("timestamp count does not match matrix columns");
  }
  SensorSequence seq;
  seq.samples.resize(t_ms.size());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    auto& s = seq.samples[static_cast<std::size_t>(j)];
    s.t_ms = t_ms[static_cast<std::size_t>(j)];
    for (int r = 0; r < kChannels; ++r) s.channel(r) = m(r, j);
  }
  return seq;
}

SensorSequence from_matrix(const Matrix& m) {
  std::vector<std::int64_t> t(static_cast<std::size_t>(m.cols()));
  for (std::size_t j = 0; j < t.size(); ++j) {
    t[j] = static_cast<std::int64_t>(j) * kNominalStepMs;
  }
  return from_matrix(m, t);
}

}  // namespace strokesense
