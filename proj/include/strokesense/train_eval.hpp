// SPDX-License-Identifier: Apache-2.0
/**
 * @file   train_eval.hpp
 * @brief  Training loop with early stopping, evaluation, the three split
 *         protocols and the class-count / train-size sweeps.
 */
#ifndef STROKESENSE_TRAIN_EVAL_HPP
#define STROKESENSE_TRAIN_EVAL_HPP

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "strokesense/core_types.hpp"
#include "strokesense/nn/model.hpp"
#include "strokesense/nn/optimizer.hpp"
#include "strokesense/preprocess.hpp"

namespace strokesense::train_eval {

using CountMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct TrainHyper {
  nn::RmsPropHyper optimizer;
  /// num_classes is taken from the training data.
  nn::ModelConfig model;
  int batch_size = 32;
  int max_epochs = 200;
  /// Stop after this many epochs without a better validation accuracy.
  int patience = 20;
  double clip_norm = 5.0;
  /// Stratified share of the train side held out for early stopping.
  double val_fraction = 0.1;
  int max_restarts = 3;
  /// Augment the train side inside run_protocol.
  bool augment = true;
  preprocess::AugmentConfig augment_config;

  void validate() const;
};

struct EpochStats {
  double loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  nn::ModelParams params;  // best-validation checkpoint
  std::vector<EpochStats> history;
  int best_epoch = 0;      // 1-based
  int restarts = 0;
};

/// Raised when every restart diverged.
class TrainingFailed : public std::runtime_error {
 public:
  TrainingFailed() : std::runtime_error("training failed") {}
};

/// Sequence -> scaled T x 6 model input.
Matrix featurize(const SensorSequence& seq);

/**
 * RMSprop on shuffled minibatches. Keeps the parameters of the epoch with the
 * best validation accuracy (first one on ties); an empty `val` uses training
 * accuracy instead. Divergence restarts from a re-seeded initialization.
 */
TrainResult train_model(const Dataset& train, const Dataset& val, const TrainHyper& hyper,
                        std::uint64_t seed);

/// Argmax predictions (first maximum on ties), one per item.
std::vector<int> predict(const nn::ModelParams& params, const Dataset& ds);

struct EvalReport {
  preprocess::SplitSpec protocol;
  std::vector<CharacterLabel> class_list;
  double accuracy = 0.0;
  /// Per-class recall; 0 for classes absent from the test set.
  std::vector<double> per_class_accuracy;
  CountMatrix confusion;  // rows: true class, columns: predicted
  long n_test = 0;
  std::vector<EpochStats> train_history;
};

/// Throws DataError on a class-list mismatch, std::invalid_argument on an
/// empty test set.
EvalReport evaluate(const nn::ModelParams& params, const Dataset& test);

/// Builds a report from true/predicted indices.
EvalReport make_report(const std::vector<CharacterLabel>& class_list, const std::vector<int>& truth,
                       const std::vector<int>& predicted);

/**
 * split -> stratified validation hold-out from the train side -> augment the
 * remaining train items -> train -> evaluate. `train_per_class` > 0 keeps
 * that many original train items per class (seeded, nested across sizes).
 * Throws std::logic_error if any test lineage reaches training.
 */
EvalReport run_protocol(const Dataset& ds, const preprocess::SplitSpec& spec,
                        const TrainHyper& hyper, std::uint64_t seed, int train_per_class = 0);

/**
 * Validation hold-out, optional per-class limit and augmentation of a train
 * side, then train_model. Throws std::logic_error when anything trained on
 * descends from an id in `forbidden_roots`.
 */
TrainResult fit(const Dataset& train_side, const TrainHyper& hyper, std::uint64_t seed,
                int train_per_class = 0, const std::set<std::string>& forbidden_roots = {});

/// Same as run_protocol after the split step.
EvalReport train_and_evaluate(const preprocess::Split& split, const preprocess::SplitSpec& spec,
                              const TrainHyper& hyper, std::uint64_t seed,
                              int train_per_class = 0);

struct SweepPoint {
  int x = 0;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;  // sample standard deviation; 0 for one repeat
  int n_repeats = 0;
  std::vector<double> accuracies;
};

SweepPoint summarize(int x, std::vector<double> accuracies);

/**
 * For each k: `repeats` random k-class subsets, each trained under the Pooled
 * protocol with `samples_per_class` train items per class.
 */
std::vector<SweepPoint> sweep_classes(const Dataset& ds, int samples_per_class,
                                      const std::vector<int>& class_counts, int repeats,
                                      const TrainHyper& hyper, double test_fraction,
                                      std::uint64_t seed);

/**
 * One Pooled split; for each size and repeat the train side is cut to `size`
 * items per class. The test set is shared by every point.
 */
std::vector<SweepPoint> sweep_train_size(const Dataset& ds, const std::vector<int>& sizes,
                                         int repeats, const TrainHyper& hyper,
                                         double test_fraction, std::uint64_t seed);

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side is constant.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace strokesense::train_eval

#endif  // STROKESENSE_TRAIN_EVAL_HPP
