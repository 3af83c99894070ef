// SPDX-License-Identifier: Apache-2.0
#include "strokesense/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "strokesense/rng.hpp"

namespace strokesense::preprocess {

Matrix scale_sequence(const Matrix& m) {
  if (m.size() == 0) throw std::invalid_argument("empty matrix");
  if (!m.allFinite()) throw std::invalid_argument("non-finite input");
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double lo = m.row(r).minCoeff();
    const double hi = m.row(r).maxCoeff();
    if (hi == lo) {
      out.row(r).setZero();
      continue;
    }
    const double span = hi - lo;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      // min and max land exactly on -1 and +1.
      const double x = m(r, j);
      out(r, j) = x == lo ? -1.0 : x == hi ? 1.0 : 2.0 * (x - lo) / span - 1.0;
    }
  }
  return out;
}

Matrix window_average(const Matrix& m, int window, int stride) {
  if (window < 1 || stride < 1) throw std::invalid_argument("window and stride must be >= 1");
  const Eigen::Index t = m.cols();
  if (window > t) throw std::invalid_argument("window larger than sequence");
  const Eigen::Index out_len = (t - window) / stride + 1;
  Matrix out(m.rows(), out_len);
  for (Eigen::Index k = 0; k < out_len; ++k) {
    out.col(k) = m.middleCols(k * stride, window).rowwise().sum() / static_cast<double>(window);
  }
  return out;
}

Matrix add_gaussian_noise(const Matrix& m, const Vector& row_sigma, std::uint64_t seed) {
  if (row_sigma.size() != m.rows()) throw std::invalid_argument("one sigma per row required");
  if ((row_sigma.array() < 0.0).any()) throw std::invalid_argument("sigma must be >= 0");
  Rng rng(seed);
  Matrix out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) out(r, j) += row_sigma(r) * rng.normal();
  }
  return out;
}

Matrix add_gaussian_noise(const Matrix& m, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (sigma == 0.0) return m;
  return add_gaussian_noise(m, Vector::Constant(m.rows(), sigma), seed);
}

void AugmentConfig::validate() const {
  for (int n : window_sizes) if (n < 1) throw std::invalid_argument("window size must be >= 1");
  for (int s : strides) if (s < 1) throw std::invalid_argument("stride must be >= 1");
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  if (noise_copies < 0) throw std::invalid_argument("noise copies must be >= 0");
  if (in_place && (window_sizes.empty() || strides.empty())) {
    throw std::invalid_argument("in-place averaging needs a window and a stride");
  }
}

namespace {

LabeledSequence make_child(const LabeledSequence& parent, const std::string& tag,
                           const Matrix& m) {
  LabeledSequence child;
  child.id = derived_id(parent.id, tag);
  child.parent_id = lineage_root(parent.id);
  child.label = parent.label;
  child.writer_id = parent.writer_id;
  child.origin = Origin::Augmented;
  child.sequence = from_matrix(m);
  return child;
}

Vector scaled_noise_sigma(const Matrix& m, double sigma) {
  Vector s(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    s(r) = sigma * (m.row(r).maxCoeff() - m.row(r).minCoeff()) / 2.0;
  }
  return s;
}

}  // namespace

Dataset augment(const Dataset& ds, const AugmentConfig& cfg) {
  cfg.validate();
  Dataset out;
  out.class_list = ds.class_list;
  out.metadata = ds.metadata;
  for (const auto& item : ds.items) {
    Matrix base = to_matrix(item.sequence);
    const std::uint64_t item_seed = mix_seed(cfg.rng_seed, hash_string(item.id));
    if (cfg.in_place) {
      const int n = cfg.window_sizes.front();
      const int s = cfg.strides.front();
      LabeledSequence smoothed = item;
      if (n <= base.cols()) {
        base = window_average(base, n, s);
        smoothed.sequence = from_matrix(base);
      }
      out.items.push_back(std::move(smoothed));
    } else {
      out.items.push_back(item);
      for (int n : cfg.window_sizes) {
        for (int s : cfg.strides) {
          if (n > base.cols()) continue;
          out.items.push_back(make_child(item, "avg" + std::to_string(n) + "x" + std::to_string(s),
                                         window_average(base, n, s)));
        }
      }
    }
    const Vector sigma = scaled_noise_sigma(base, cfg.noise_sigma);
    for (int k = 0; k < cfg.noise_copies; ++k) {
      out.items.push_back(make_child(item, "noise" + std::to_string(k),
                                     add_gaussian_noise(base, sigma, mix_seed(item_seed, k))));
    }
  }
  return out;
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::WriterDisjoint: return "writer-disjoint";
    case Protocol::Pooled: return "pooled";
    case Protocol::Mixed: return "mixed";
  }
  return "?";
}

Protocol parse_protocol(std::string_view s) {
  if (s == "writer-disjoint" || s == "writer_disjoint") return Protocol::WriterDisjoint;
  if (s == "pooled") return Protocol::Pooled;
  if (s == "mixed") return Protocol::Mixed;
  throw std::invalid_argument("unknown protocol '" + std::string(s) + "'");
}

void SplitSpec::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must be in (0, 1)");
  }
  const std::set<std::string> train(train_writers.begin(), train_writers.end());
  const std::set<std::string> test(test_writers.begin(), test_writers.end());
  switch (protocol) {
    case Protocol::Pooled:
      break;
    case Protocol::WriterDisjoint:
      if (train.empty() || test.empty()) {
        throw std::invalid_argument("writer-disjoint split needs train and test writers");
      }
      for (const auto& w : train) {
        if (test.count(w)) throw std::invalid_argument("writer " + w + " is on both sides");
      }
      break;
    case Protocol::Mixed: {
      if (train.empty()) throw std::invalid_argument("mixed split needs train writers");
      std::size_t unknown = 0;
      for (const auto& w : train) {
        if (!test.count(w)) throw std::invalid_argument("mixed split: test writers must include " + w);
      }
      for (const auto& w : test) unknown += train.count(w) ? 0 : 1;
      if (unknown == 0) throw std::invalid_argument("mixed split needs at least one unknown writer");
      break;
    }
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const Dataset& ds, std::span<const std::size_t> indices, double fraction,
    std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i : indices) by_class[ds.class_index(ds.items[i].label)].push_back(i);
  std::vector<std::size_t> kept, held;
  for (auto& [cls, members] : by_class) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cls + 1)));
    rng.shuffle(members);
    const auto n_out = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    held.insert(held.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_out));
    kept.insert(kept.end(), members.begin() + static_cast<std::ptrdiff_t>(n_out), members.end());
  }
  std::sort(kept.begin(), kept.end());
  std::sort(held.begin(), held.end());
  return {kept, held};
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
  Dataset out;
  out.class_list = ds.class_list;
  out.metadata = ds.metadata;
  out.items.reserve(indices.size());
  for (std::size_t i : indices) out.items.push_back(ds.items[i]);
  return out;
}

Split split(const Dataset& ds, const SplitSpec& spec) {
  spec.validate();
  std::set<std::string> present_ids;
  for (const auto& item : ds.items) present_ids.insert(item.id);

  // Roots are originals plus augmented items whose parent is absent.
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    const auto& item = ds.items[i];
    if (!item.parent_id || !present_ids.count(*item.parent_id)) roots.push_back(i);
  }

  const std::set<std::string> writers_present = [&] {
    auto w = ds.writers();
    return std::set<std::string>(w.begin(), w.end());
  }();
  auto require_writers = [&](const std::vector<std::string>& ws) {
    for (const auto& w : ws) {
      if (!writers_present.count(w)) throw DataError("writer " + w + " not in dataset");
    }
  };
  auto writer_roots = [&](const std::set<std::string>& ws) {
    std::vector<std::size_t> out;
    for (std::size_t i : roots) if (ws.count(ds.items[i].writer_id)) out.push_back(i);
    return out;
  };

  std::vector<std::size_t> train_roots, test_roots;
  const std::set<std::string> train_w(spec.train_writers.begin(), spec.train_writers.end());
  const std::set<std::string> test_w(spec.test_writers.begin(), spec.test_writers.end());
  switch (spec.protocol) {
    case Protocol::Pooled:
      std::tie(train_roots, test_roots) =
          stratified_holdout(ds, roots, spec.test_fraction, spec.rng_seed);
      break;
    case Protocol::WriterDisjoint:
      require_writers(spec.train_writers);
      require_writers(spec.test_writers);
      train_roots = writer_roots(train_w);
      test_roots = writer_roots(test_w);
      break;
    case Protocol::Mixed: {
      require_writers(spec.train_writers);
      require_writers(spec.test_writers);
      const auto known = writer_roots(train_w);
      std::tie(train_roots, test_roots) =
          stratified_holdout(ds, known, spec.test_fraction, spec.rng_seed);
      std::set<std::string> unknown;
      for (const auto& w : test_w) if (!train_w.count(w)) unknown.insert(w);
      const auto extra = writer_roots(unknown);
      test_roots.insert(test_roots.end(), extra.begin(), extra.end());
      std::sort(test_roots.begin(), test_roots.end());
      break;
    }
  }

  std::set<std::string> train_ids;
  for (std::size_t i : train_roots) train_ids.insert(ds.items[i].id);
  std::vector<std::size_t> train_idx;
  const std::set<std::size_t> root_set(roots.begin(), roots.end());
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    if (root_set.count(i)) {
      if (train_ids.count(ds.items[i].id)) train_idx.push_back(i);
    } else if (train_ids.count(*ds.items[i].parent_id)) {
      train_idx.push_back(i);
    }
  }

  Split out{subset(ds, train_idx), subset(ds, test_roots)};
  if (out.train.items.empty() || out.test.items.empty()) throw DataError("degenerate split");
  return out;
}

PaddedBatch pad_batch(std::span<const Matrix> items) {
  if (items.empty()) throw std::invalid_argument("empty batch");
  PaddedBatch batch;
  int t_max = 0;
  for (const auto& m : items) {
    if (m.rows() != kChannels || m.cols() < 1) throw std::invalid_argument("items must be 6 x T, T >= 1");
    batch.lengths.push_back(static_cast<int>(m.cols()));
    t_max = std::max(t_max, static_cast<int>(m.cols()));
  }
  const auto b = static_cast<Eigen::Index>(items.size());
  batch.steps.assign(static_cast<std::size_t>(t_max), Matrix::Zero(kChannels, b));
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto& m = items[static_cast<std::size_t>(i)];
    for (Eigen::Index t = 0; t < m.cols(); ++t) batch.steps[static_cast<std::size_t>(t)].col(i) = m.col(t);
  }
  return batch;
}

}  // namespace strokesense::preprocess
