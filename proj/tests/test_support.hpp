// SPDX-License-Identifier: Apache-2.0
// Shared fixtures for the unit tests.
#ifndef STROKESENSE_TEST_SUPPORT_HPP
#define STROKESENSE_TEST_SUPPORT_HPP

#include <unistd.h>

#include <filesystem>
#include <string>

#include "strokesense/core_types.hpp"
#include "strokesense/rng.hpp"

namespace strokesense::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("strokesense_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

 private:
  std::filesystem::path path_;
};

inline SensorSequence random_sequence(Rng& rng, int length) {
  SensorSequence seq;
  for (int t = 0; t < length; ++t) {
    SensorSample s;
    s.t_ms = t * kNominalStepMs;
    for (int c = 0; c < kChannels; ++c) s.channel(c) = c < 3 ? rng.uniform(-3, 3) : rng.uniform(-400, 400);
    seq.samples.push_back(s);
  }
  return seq;
}

inline CharacterLabel latin(int index) {
  return {Alphabet::Latin, index, std::string(1, static_cast<char>('a' + index))};
}

/// `per` random items for every (writer, class); ids "w<k>_c<i>_<r>".
inline Dataset random_dataset(int classes, int writers, int per, std::uint64_t seed,
                              int min_len = 12, int max_len = 30) {
  Rng rng(seed);
  Dataset ds;
  for (int c = 0; c < classes; ++c) ds.class_list.push_back(latin(c));
  for (int w = 1; w <= writers; ++w) {
    for (int c = 0; c < classes; ++c) {
      for (int r = 0; r < per; ++r) {
        LabeledSequence item;
        item.id = "w" + std::to_string(w) + "_c" + std::to_string(c) + "_" + std::to_string(r);
        item.writer_id = "w" + std::to_string(w);
        item.label = latin(c);
        item.origin = Origin::Recorded;
        const int len = min_len + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len - min_len + 1)));
        item.sequence = random_sequence(rng, len);
        ds.items.push_back(std::move(item));
      }
    }
  }
  return ds;
}

}  // namespace strokesense::testing

#endif  // STROKESENSE_TEST_SUPPORT_HPP
