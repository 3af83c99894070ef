// SPDX-License-Identifier: Apache-2.0
#include "strokesense/report.hpp"

#include <fstream>

#include "strokesense/dataset_io.hpp"

namespace strokesense::report {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(io::split_csv_line(line));
  }
  return rows;
}

}  // namespace

void export_sweep(const std::vector<train_eval::SweepPoint>& points, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kSweepHeader << '\n';
  for (const auto& p : points) {
    out << p.x << ',' << io::format_number(p.mean_accuracy) << ',' << io::format_number(p.std_accuracy)
        << ',' << p.n_repeats << '\n';
  }
  finish(out, path);
}

std::vector<train_eval::SweepPoint> read_sweep(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty() || rows[0].size() != 4 || rows[0][0] != "x") {
    throw DataError("not a sweep CSV: " + path.string());
  }
  std::vector<train_eval::SweepPoint> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 4) throw DataError("malformed sweep row " + std::to_string(i + 1));
    train_eval::SweepPoint p;
    try {
      p.x = std::stoi(rows[i][0]);
      p.mean_accuracy = std::stod(rows[i][1]);
      p.std_accuracy = std::stod(rows[i][2]);
      p.n_repeats = std::stoi(rows[i][3]);
    } catch (const std::exception&) {
      throw DataError("malformed sweep row " + std::to_string(i + 1));
    }
    out.push_back(p);
  }
  return out;
}

void export_confusion(const train_eval::EvalReport& r, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "true\\pred";
  for (const auto& c : r.class_list) out << ',' << c.glyph;
  out << '\n';
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    out << r.class_list[static_cast<std::size_t>(i)].glyph;
    for (Eigen::Index j = 0; j < r.confusion.cols(); ++j) out << ',' << r.confusion(i, j);
    out << '\n';
  }
  finish(out, path);
}

ConfusionTable read_confusion(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  if (rows.empty()) throw DataError("empty confusion CSV: " + path.string());
  ConfusionTable t;
  t.glyphs.assign(rows[0].begin() + 1, rows[0].end());
  const auto c = static_cast<Eigen::Index>(t.glyphs.size());
  if (static_cast<Eigen::Index>(rows.size()) != c + 1) throw DataError("confusion CSV is not square");
  t.counts = train_eval::CountMatrix::Zero(c, c);
  for (Eigen::Index i = 0; i < c; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i + 1)];
    if (static_cast<Eigen::Index>(row.size()) != c + 1) throw DataError("confusion CSV is not square");
    for (Eigen::Index j = 0; j < c; ++j) t.counts(i, j) = std::stol(row[static_cast<std::size_t>(j + 1)]);
  }
  return t;
}

}  // namespace strokesense::report
