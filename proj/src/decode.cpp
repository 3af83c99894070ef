// SPDX-License-Identifier: Apache-2.0
#include "strokesense/decode.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "strokesense/core_types.hpp"

namespace strokesense::decode {

std::u32string utf8_to_code_points(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      throw std::invalid_argument("malformed UTF-8");
    }
    if (i + static_cast<std::size_t>(extra) >= s.size()) {
      throw std::invalid_argument("truncated UTF-8");
    }
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
      if ((b & 0xC0) != 0x80) throw std::invalid_argument("malformed UTF-8");
      cp = (cp << 6) | (b & 0x3F);
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(extra) + 1;
  }
  return out;
}

int edit_distance(std::u32string_view a, std::u32string_view b) {
  std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

int edit_distance(std::string_view a, std::string_view b) {
  return edit_distance(utf8_to_code_points(a), utf8_to_code_points(b));
}

void Dictionary::validate() const {
  if (words.empty()) throw std::invalid_argument("dictionary is empty");
  if (words.count("")) throw std::invalid_argument("dictionary contains an empty word");
  if (max_edit < 0) throw std::invalid_argument("max_edit must be >= 0");
}

Dictionary load_dictionary(const std::filesystem::path& path, int max_edit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dictionary " + path.string());
  Dictionary d;
  d.max_edit = max_edit;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) d.words.insert(line);
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return d;
}

Correction correct_word(std::string_view chars, const Dictionary& dict) {
  dict.validate();
  const auto query = utf8_to_code_points(chars);
  Correction best{std::string(chars), -1};
  for (const auto& w : dict.words) {
    const int d = edit_distance(query, utf8_to_code_points(w));
    if (d <= dict.max_edit && (best.distance < 0 || d < best.distance)) {
      best = {w, d};
      if (d == 0) break;
    }
  }
  return best;
}

double word_accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("word lists differ in length");
  if (truth.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace strokesense::decode
