// SPDX-License-Identifier: Apache-2.0
/**
 * @file   report.hpp
 * @brief  CSV export of evaluation reports and sweeps.
 *
 * Sweep CSV:      x,mean_accuracy,std_accuracy,n_repeats
 * Confusion CSV:  (C+1) x (C+1) grid; the first row and column hold glyphs,
 *                 rows are true classes and columns predictions.
 */
#ifndef STROKESENSE_REPORT_HPP
#define STROKESENSE_REPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "strokesense/train_eval.hpp"

namespace strokesense::report {

inline constexpr const char* kSweepHeader = "x,mean_accuracy,std_accuracy,n_repeats";

void export_sweep(const std::vector<train_eval::SweepPoint>& points, const std::filesystem::path& path);
std::vector<train_eval::SweepPoint> read_sweep(const std::filesystem::path& path);

void export_confusion(const train_eval::EvalReport& r, const std::filesystem::path& path);

struct ConfusionTable {
  std::vector<std::string> glyphs;
  train_eval::CountMatrix counts;
};
ConfusionTable read_confusion(const std::filesystem::path& path);

}  // namespace strokesense::report

#endif  // STROKESENSE_REPORT_HPP
