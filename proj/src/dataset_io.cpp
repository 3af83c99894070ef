// SPDX-License-Identifier: Apache-2.0
#include "strokesense/dataset_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>

namespace strokesense::io {

namespace fs = std::filesystem;

namespace {

bool is_safe_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.' ||
                    c == kLineageSeparator;
    if (!ok) return false;
  }
  return id != "." && id != "..";
}

void require_csv_safe(std::string_view field, std::string_view what) {
  if (field.find_first_of(",\n\r\"") != std::string_view::npos) {
    throw DataError(std::string(what) + " '" + std::string(field) +
                    "' cannot be stored in a CSV field");
  }
}

double parse_double(std::string_view s, const std::string& where) {
  // strtod handles inf/nan spellings written by format_number.
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
    throw DataError("malformed number '" + tmp + "' " + where);
  }
  return v;
}

long long parse_int(std::string_view s, const std::string& where) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError("malformed integer '" + std::string(s) + "' " + where);
  }
  return v;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

void write_sequence_csv(const SensorSequence& seq, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << kSequenceHeader << '\n';
  for (const auto& s : seq.samples) {
    out << s.t_ms;
    for (int c = 0; c < kChannels; ++c) out << ',' << format_number(s.channel(c));
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

SensorSequence read_sequence_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != kSequenceHeader) {
    throw DataError(path.string() + " line 1: bad header");
  }
  SensorSequence seq;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto where = "at " + path.string() + " line " + std::to_string(line_no);
    const auto fields = split_csv_line(line);
    if (fields.size() != 1 + kChannels) {
      throw DataError("malformed CSV " + where + ": expected 7 fields");
    }
    SensorSample s;
    s.t_ms = parse_int(fields[0], where);
    for (int c = 0; c < kChannels; ++c) s.channel(c) = parse_double(fields[1 + c], where);
    seq.samples.push_back(s);
  }
  return seq;
}

fs::path write_dataset(const Dataset& ds, const fs::path& directory) {
  std::error_code ec;
  fs::create_directories(directory / "sequences", ec);
  if (ec) throw DataError("cannot create " + directory.string() + ": " + ec.message());

  for (const auto& c : ds.class_list) require_csv_safe(c.glyph, "glyph");
  for (const auto& [k, v] : ds.metadata) {
    require_csv_safe(k, "metadata key");
    require_csv_safe(v, "metadata value");
  }

  const fs::path manifest = directory / kManifestName;
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw DataError("cannot write " + manifest.string());
  for (const auto& c : ds.class_list) {
    out << "#class," << to_string(c.alphabet) << ',' << c.char_index << ',' << c.glyph << '\n';
  }
  for (const auto& [k, v] : ds.metadata) out << "#meta," << k << ',' << v << '\n';
  out << kManifestHeader << '\n';

  std::set<std::string> seen;
  for (const auto& item : ds.items) {
    if (!is_safe_id(item.id)) throw DataError("id '" + item.id + "' is not file-name safe");
    if (!seen.insert(item.id).second) throw DataError("duplicate id " + item.id);
    require_csv_safe(item.writer_id, "writer id");
    require_csv_safe(item.label.glyph, "glyph");
    const std::string rel = "sequences/" + item.id + ".csv";
    write_sequence_csv(item.sequence, directory / rel);
    out << item.id << ',' << item.writer_id << ',' << to_string(item.label.alphabet) << ','
        << item.label.char_index << ',' << item.label.glyph << ',' << to_string(item.origin)
        << ',' << rel << '\n';
  }
  if (!out) throw DataError("write failed for " + manifest.string());
  return manifest;
}

Dataset read_dataset(const fs::path& manifest_or_dir) {
  const fs::path manifest = fs::is_directory(manifest_or_dir)
                                ? manifest_or_dir / kManifestName
                                : manifest_or_dir;
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();

  Dataset ds;
  bool explicit_classes = false;
  bool header_seen = false;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto where = "at " + manifest.string() + " line " + std::to_string(line_no);
    auto fields = split_csv_line(line);
    if (!header_seen && line.front() == '#') {
      if (fields[0] == "#class" && fields.size() == 4) {
        explicit_classes = true;
        ds.class_list.push_back({parse_alphabet(fields[1]),
                                 static_cast<int>(parse_int(fields[2], where)), fields[3]});
      } else if (fields[0] == "#meta" && fields.size() == 3) {
        ds.metadata[fields[1]] = fields[2];
      } else {
        throw DataError("malformed directive " + where);
      }
      continue;
    }
    if (!header_seen) {
      if (line != kManifestHeader) throw DataError("bad manifest header " + where);
      header_seen = true;
      continue;
    }
    ++row;
    if (fields.size() != 7) throw DataError("malformed CSV " + where + ": expected 7 fields");
    LabeledSequence item;
    item.id = fields[0];
    if (!ids.insert(item.id).second) throw DataError("duplicate id " + item.id + " " + where);
    item.writer_id = fields[1];
    item.label = {parse_alphabet(fields[2]), static_cast<int>(parse_int(fields[3], where)),
                  fields[4]};
    item.origin = parse_origin(fields[5]);
    if (item.origin == Origin::Augmented) item.parent_id = lineage_root(item.id);
    const fs::path file = base / fields[6];
    if (!fs::exists(file)) {
      throw DataError("missing sequence file row " + std::to_string(row) + " (" +
                      file.string() + ")");
    }
    item.sequence = read_sequence_csv(file);
    if (!explicit_classes && ds.class_index(item.label) < 0) {
      ds.class_list.push_back(item.label);
    }
    ds.items.push_back(std::move(item));
  }
  if (!header_seen) throw DataError("manifest " + manifest.string() + " has no header");
  return ds;
}

}  // namespace strokesense::io
