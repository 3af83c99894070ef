// SPDX-License-Identifier: Apache-2.0
/**
 * @file   decode.hpp
 * @brief  Dictionary-based word correction for recognized character streams.
 *
 * Strings are UTF-8; distances count code points, so Georgian letters cost
 * one edit each.
 */
#ifndef STROKESENSE_DECODE_HPP
#define STROKESENSE_DECODE_HPP

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace strokesense::decode {

/// Code points of a UTF-8 string. Throws std::invalid_argument on malformed input.
std::u32string utf8_to_code_points(std::string_view s);

/// Levenshtein distance over code points.
int edit_distance(std::string_view a, std::string_view b);
int edit_distance(std::u32string_view a, std::u32string_view b);

struct Dictionary {
  std::set<std::string> words;  // ordered, so iteration is lexicographic
  int max_edit = 2;

  void validate() const;
};

/// One word per line; blank lines skipped.
Dictionary load_dictionary(const std::filesystem::path& path, int max_edit = 2);

struct Correction {
  std::string word;
  int distance = -1;  // -1: nothing within max_edit, word returned unchanged
};

/// Closest dictionary word within max_edit; ties go to the lexicographically
/// smallest word.
Correction correct_word(std::string_view chars, const Dictionary& dict);

/// Exact-match fraction. Throws std::invalid_argument on a length mismatch.
double word_accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& truth);

}  // namespace strokesense::decode

#endif  // STROKESENSE_DECODE_HPP
