// SPDX-License-Identifier: Apache-2.0
#include "strokesense/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "strokesense/rng.hpp"

namespace strokesense::train_eval {

namespace {

constexpr std::size_t kPredictChunk = 64;

bool same_classes(const std::vector<CharacterLabel>& a, const std::vector<CharacterLabel>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].alphabet != b[i].alphabet || a[i].glyph != b[i].glyph) return false;
  }
  return true;
}

std::vector<nn::TrainSample> to_samples(const Dataset& ds) {
  const int c = static_cast<int>(ds.class_list.size());
  std::vector<nn::TrainSample> out;
  out.reserve(ds.items.size());
  for (const auto& item : ds.items) {
    nn::TrainSample s;
    s.x = featurize(item.sequence);
    s.y = Vector::Zero(c);
    s.y(ds.class_index(item.label)) = 1.0;
    s.id = item.id;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<int> predict_samples(const nn::ModelParams& params,
                                 const std::vector<nn::TrainSample>& samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += kPredictChunk) {
    const std::size_t end = std::min(samples.size(), start + kPredictChunk);
    std::vector<Matrix> items;
    for (std::size_t i = start; i < end; ++i) items.emplace_back(samples[i].x.transpose());
    const auto cache = nn::forward(params, preprocess::pad_batch(items));
    for (Eigen::Index i = 0; i < cache.probs().cols(); ++i) {
      out.push_back(nn::argmax_first(cache.probs().col(i)));
    }
  }
  return out;
}

double accuracy_of(const nn::ModelParams& params, const std::vector<nn::TrainSample>& samples) {
  if (samples.empty()) return 0.0;
  const auto pred = predict_samples(params, samples);
  long hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) hits += pred[i] == samples[i].label();
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

// Per-class seeded shuffle of the original items; keeps the first n of each
// class so smaller sizes are subsets of larger ones.
std::vector<std::size_t> limit_per_class(const Dataset& ds, int n, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    if (ds.items[i].origin != Origin::Augmented) by_class[ds.class_index(ds.items[i].label)].push_back(i);
  }
  std::set<std::string> kept_roots;
  for (auto& [cls, members] : by_class) {
    if (static_cast<int>(members.size()) < n) {
      throw DataError("insufficient data: class " + ds.class_list[static_cast<std::size_t>(cls)].glyph +
                      " has " + std::to_string(members.size()) + " train items, need " +
                      std::to_string(n));
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cls + 1)));
    rng.shuffle(members);
    for (int k = 0; k < n; ++k) kept_roots.insert(ds.items[members[static_cast<std::size_t>(k)]].id);
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ds.items.size(); ++i) {
    if (kept_roots.count(lineage_root(ds.items[i].id))) out.push_back(i);
  }
  return out;
}

}  // namespace

void TrainHyper::validate() const {
  optimizer.validate();
  augment_config.validate();
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw std::invalid_argument("val fraction must be in [0, 1)");
  if (max_restarts < 0) throw std::invalid_argument("max restarts must be >= 0");
}

Matrix featurize(const SensorSequence& seq) {
  return preprocess::scale_sequence(to_matrix(seq)).transpose();
}

TrainResult train_model(const Dataset& train, const Dataset& val, const TrainHyper& hyper,
                        std::uint64_t seed) {
  hyper.validate();
  if (train.items.empty()) throw std::invalid_argument("empty training set");
  if (!val.items.empty() && !same_classes(train.class_list, val.class_list)) {
    throw DataError("class-list mismatch between train and validation sets");
  }
  nn::ModelConfig config = hyper.model;
  config.num_classes = static_cast<int>(train.class_list.size());
  config.input_dim = kChannels;

  const auto train_samples = to_samples(train);
  const auto val_samples = to_samples(val);
  const auto bs = static_cast<std::size_t>(hyper.batch_size);

  for (int attempt = 0; attempt <= hyper.max_restarts; ++attempt) {
    const std::uint64_t run_seed = mix_seed(seed, static_cast<std::uint64_t>(attempt));
    TrainResult result;
    result.restarts = attempt;
    nn::ModelParams params = nn::init_params(config, mix_seed(run_seed, 1));
    nn::OptState opt = nn::make_opt_state(params, hyper.optimizer);
    Rng order_rng(mix_seed(run_seed, 2));
    std::vector<std::size_t> order(train_samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<nn::TrainSample> batch;
    double best = -1.0;
    try {
      for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        order_rng.shuffle(order);
        double loss_sum = 0.0;
        long correct = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
          const std::size_t end = std::min(order.size(), start + bs);
          batch.clear();
          for (std::size_t i = start; i < end; ++i) batch.push_back(train_samples[order[i]]);
          const auto step = nn::train_step(params, opt, batch, hyper.clip_norm);
          loss_sum += step.loss * static_cast<double>(end - start);
          correct += step.correct;
        }
        EpochStats stats;
        stats.loss = loss_sum / static_cast<double>(order.size());
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        stats.val_accuracy = val_samples.empty() ? accuracy_of(params, train_samples)
                                                 : accuracy_of(params, val_samples);
        result.history.push_back(stats);
        if (stats.val_accuracy > best) {
          best = stats.val_accuracy;
          result.best_epoch = epoch;
          result.params = params;
        } else if (epoch - result.best_epoch >= hyper.patience) {
          break;
        }
      }
      return result;
    } catch (const nn::DivergedError&) {
      // Re-seeded restart.
    }
  }
  throw TrainingFailed();
}

std::vector<int> predict(const nn::ModelParams& params, const Dataset& ds) {
  std::vector<nn::TrainSample> samples;
  samples.reserve(ds.items.size());
  for (const auto& item : ds.items) samples.push_back({featurize(item.sequence), Vector(), item.id});
  return predict_samples(params, samples);
}

EvalReport make_report(const std::vector<CharacterLabel>& class_list, const std::vector<int>& truth,
                       const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("one prediction per item");
  const auto c = static_cast<Eigen::Index>(class_list.size());
  EvalReport r;
  r.class_list = class_list;
  r.confusion = CountMatrix::Zero(c, c);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= c || predicted[i] < 0 || predicted[i] >= c) {
      throw std::invalid_argument("class index out of range");
    }
    ++r.confusion(truth[i], predicted[i]);
  }
  r.n_test = static_cast<long>(truth.size());
  r.accuracy = r.n_test > 0 ? static_cast<double>(r.confusion.trace()) / static_cast<double>(r.n_test) : 0.0;
  for (Eigen::Index k = 0; k < c; ++k) {
    const long row = r.confusion.row(k).sum();
    r.per_class_accuracy.push_back(row > 0 ? static_cast<double>(r.confusion(k, k)) / static_cast<double>(row) : 0.0);
  }
  return r;
}

EvalReport evaluate(const nn::ModelParams& params, const Dataset& test) {
  if (test.items.empty()) throw std::invalid_argument("empty test set");
  if (params.config.num_classes != static_cast<int>(test.class_list.size())) {
    throw DataError("class-list mismatch: model has " + std::to_string(params.config.num_classes) +
                    " classes, test set " + std::to_string(test.class_list.size()));
  }
  std::vector<int> truth;
  truth.reserve(test.items.size());
  for (const auto& item : test.items) truth.push_back(test.class_index(item.label));
  return make_report(test.class_list, truth, predict(params, test));
}

TrainResult fit(const Dataset& train_side_in, const TrainHyper& hyper, std::uint64_t seed,
                int train_per_class, const std::set<std::string>& forbidden_roots) {
  hyper.validate();
  Dataset train_side = train_side_in;
  if (train_per_class > 0) {
    const auto keep = limit_per_class(train_side, train_per_class, mix_seed(seed, 11));
    train_side = preprocess::subset(train_side, keep);
  }

  // Validation comes from original train items; their descendants are dropped.
  std::vector<std::size_t> originals;
  for (std::size_t i = 0; i < train_side.items.size(); ++i) {
    if (train_side.items[i].origin != Origin::Augmented) originals.push_back(i);
  }
  const auto held = preprocess::stratified_holdout(train_side, originals, hyper.val_fraction,
                                                   mix_seed(seed, 12))
                        .second;
  std::set<std::string> val_ids;
  for (std::size_t i : held) val_ids.insert(train_side.items[i].id);
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < train_side.items.size(); ++i) {
    if (!val_ids.count(lineage_root(train_side.items[i].id))) train_idx.push_back(i);
  }
  Dataset train = preprocess::subset(train_side, train_idx);
  const Dataset val = preprocess::subset(train_side, held);
  if (train.items.empty()) throw DataError("degenerate split");
  if (hyper.augment) {
    preprocess::AugmentConfig ac = hyper.augment_config;
    ac.rng_seed = mix_seed(seed, 13);
    train = preprocess::augment(train, ac);
  }

  // Lineage audit: nothing trained on may descend from a test item.
  for (const Dataset* side : {static_cast<const Dataset*>(&train), &val}) {
    for (const auto& item : side->items) {
      if (forbidden_roots.count(lineage_root(item.id))) {
        throw std::logic_error("test lineage leaked into training: " + item.id);
      }
    }
  }
  return train_model(train, val, hyper, mix_seed(seed, 14));
}

EvalReport train_and_evaluate(const preprocess::Split& split, const preprocess::SplitSpec& spec,
                              const TrainHyper& hyper, std::uint64_t seed, int train_per_class) {
  std::set<std::string> test_roots;
  for (const auto& item : split.test.items) test_roots.insert(lineage_root(item.id));
  const TrainResult tr = fit(split.train, hyper, seed, train_per_class, test_roots);
  EvalReport report = evaluate(tr.params, split.test);
  report.protocol = spec;
  report.train_history = tr.history;
  return report;
}

EvalReport run_protocol(const Dataset& ds, const preprocess::SplitSpec& spec,
                        const TrainHyper& hyper, std::uint64_t seed, int train_per_class) {
  return train_and_evaluate(preprocess::split(ds, spec), spec, hyper, seed, train_per_class);
}

SweepPoint summarize(int x, std::vector<double> accuracies) {
  if (accuracies.empty()) throw std::invalid_argument("sweep point needs at least one repeat");
  SweepPoint p;
  p.x = x;
  p.n_repeats = static_cast<int>(accuracies.size());
  const double n = static_cast<double>(accuracies.size());
  p.mean_accuracy = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
  if (accuracies.size() > 1) {
    double ss = 0.0;
    for (double a : accuracies) ss += (a - p.mean_accuracy) * (a - p.mean_accuracy);
    p.std_accuracy = std::sqrt(ss / (n - 1.0));
  }
  p.accuracies = std::move(accuracies);
  return p;
}

std::vector<SweepPoint> sweep_classes(const Dataset& ds, int samples_per_class,
                                      const std::vector<int>& class_counts, int repeats,
                                      const TrainHyper& hyper, double test_fraction,
                                      std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  const int c = static_cast<int>(ds.class_list.size());
  for (int k : class_counts) {
    if (k < 2 || k > c) {
      throw DataError("insufficient data: cannot draw " + std::to_string(k) + " classes from " +
                      std::to_string(c));
    }
  }
  std::vector<SweepPoint> out;
  for (int k : class_counts) {
    std::vector<double> acc;
    for (int r = 0; r < repeats; ++r) {
      const std::uint64_t job = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(k)), static_cast<std::uint64_t>(r));
      std::vector<int> classes(static_cast<std::size_t>(c));
      std::iota(classes.begin(), classes.end(), 0);
      Rng rng(job);
      rng.shuffle(classes);
      classes.resize(static_cast<std::size_t>(k));
      std::sort(classes.begin(), classes.end());

      Dataset sub;
      sub.metadata = ds.metadata;
      for (int cls : classes) sub.class_list.push_back(ds.class_list[static_cast<std::size_t>(cls)]);
      const std::set<int> chosen(classes.begin(), classes.end());
      for (const auto& item : ds.items) {
        if (chosen.count(ds.class_index(item.label))) sub.items.push_back(item);
      }
      preprocess::SplitSpec spec;
      spec.protocol = preprocess::Protocol::Pooled;
      spec.test_fraction = test_fraction;
      spec.rng_seed = mix_seed(job, 1);
      acc.push_back(run_protocol(sub, spec, hyper, mix_seed(job, 2), samples_per_class).accuracy);
    }
    out.push_back(summarize(k, std::move(acc)));
  }
  return out;
}

std::vector<SweepPoint> sweep_train_size(const Dataset& ds, const std::vector<int>& sizes,
                                         int repeats, const TrainHyper& hyper,
                                         double test_fraction, std::uint64_t seed) {
  if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  preprocess::SplitSpec spec;
  spec.protocol = preprocess::Protocol::Pooled;
  spec.test_fraction = test_fraction;
  spec.rng_seed = mix_seed(seed, 1);
  const preprocess::Split split = preprocess::split(ds, spec);
  std::vector<SweepPoint> out;
  for (int size : sizes) {
    if (size < 1) throw std::invalid_argument("train sizes must be >= 1");
    std::vector<double> acc;
    for (int r = 0; r < repeats; ++r) {
      acc.push_back(train_and_evaluate(split, spec, hyper, mix_seed(seed, static_cast<std::uint64_t>(r) + 2), size)
                        .accuracy);
    }
    out.push_back(summarize(size, std::move(acc)));
  }
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman needs equal-length inputs");
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace strokesense::train_eval
