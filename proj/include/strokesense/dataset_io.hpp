// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dataset_io.hpp
 * @brief  On-disk dataset layout: a manifest CSV plus one CSV per sequence.
 *
 * Manifest (`manifest.csv`):
 *
 *   #class,<alphabet>,<label_index>,<glyph>     optional, defines class order
 *   #meta,<key>,<value>                         optional, free-form metadata
 *   id,writer_id,alphabet,label_index,glyph,origin,file
 *   <one row per item>
 *
 * Sequence files live under `sequences/` with header
 * `t_ms,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps` and values printed with 9
 * significant digits.
 */
#ifndef STROKESENSE_DATASET_IO_HPP
#define STROKESENSE_DATASET_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "strokesense/core_types.hpp"

namespace strokesense::io {

inline constexpr const char* kManifestName = "manifest.csv";
inline constexpr const char* kManifestHeader =
    "id,writer_id,alphabet,label_index,glyph,origin,file";
inline constexpr const char* kSequenceHeader =
    "t_ms,ax_g,ay_g,az_g,gx_dps,gy_dps,gz_dps";

/// Writes the dataset into `directory` (created if needed); returns the
/// manifest path. Throws DataError when the directory is unwritable or a
/// field cannot be represented in the CSV layout.
std::filesystem::path write_dataset(const Dataset& ds,
                                    const std::filesystem::path& directory);

/// Reads a manifest; accepts either the manifest file or its directory.
Dataset read_dataset(const std::filesystem::path& manifest_or_dir);

void write_sequence_csv(const SensorSequence& seq, const std::filesystem::path& path);
SensorSequence read_sequence_csv(const std::filesystem::path& path);

/// "%.9g" formatting shared by every CSV writer.
std::string format_number(double v);
/// Splits one CSV line on commas (no quoting).
std::vector<std::string> split_csv_line(std::string_view line);

}  // namespace strokesense::io

#endif  // STROKESENSE_DATASET_IO_HPP
