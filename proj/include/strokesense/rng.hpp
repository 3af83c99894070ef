// SPDX-License-Identifier: Apache-2.0
/**
 * @file   rng.hpp
 * @brief  Reproducible random streams.
 *
 * Every draw is defined in terms of std::mt19937_64, whose output sequence is
 * fixed by the C++ standard. Distributions are implemented here (Box-Muller for
 * normals, rejection for bounded integers) because the standard library
 * distributions are implementation-defined.
 */
#ifndef STROKESENSE_RNG_HPP
#define STROKESENSE_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace strokesense {

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
/// Derives a child seed; order of arguments matters.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);
/// FNV-1a over the bytes of `s`.
std::uint64_t hash_string(std::string_view s);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  /// Uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace strokesense

#endif  // STROKESENSE_RNG_HPP
