// SPDX-License-Identifier: Apache-2.0
/**
 * @file   model.hpp
 * @brief  LSTM(20) -> LSTM(25) -> Dense(25, ReLU) -> Dense(C, softmax).
 *
 * The second LSTM is read at each item's true final step, so padded batches
 * give the same result as unpadded single-item passes.
 */
#ifndef STROKESENSE_NN_MODEL_HPP
#define STROKESENSE_NN_MODEL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "strokesense/nn/layers.hpp"
#include "strokesense/preprocess.hpp"

namespace strokesense::nn {

struct ModelConfig {
  int num_classes = 2;
  int input_dim = kChannels;
  int lstm1_units = 20;
  int lstm2_units = 25;
  int dense_units = 25;
  /// Adds a second Dense(dense_units, ReLU) before the classifier.
  bool extra_dense = false;
  /// Uses the hard sigmoid for the candidate and cell output as well.
  bool hard_sigmoid_everywhere = false;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ModelParams {
  ModelConfig config;
  LstmParams lstm1;
  LstmParams lstm2;
  std::vector<DenseParams> hidden;  // ReLU layers
  DenseParams output;               // softmax classifier

  static ModelParams zeros(const ModelConfig& config);

  /// Views over every tensor in checkpoint order:
  /// lstm1 W, U, b; lstm2 W, U, b; hidden W, b (each); output W, b.
  /// Matrices are column-major.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::vector<std::string> tensor_names() const;
  std::size_t parameter_count() const;

  CellActivation cell_activation() const {
    return config.hard_sigmoid_everywhere ? CellActivation::HardSigmoid : CellActivation::Tanh;
  }
};

/// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct ForwardCache {
  std::vector<int> lengths;
  LstmCache lstm1;
  LstmCache lstm2;
  Matrix final_hidden;  // lstm2 state at each true final step, H2 x B
  std::vector<DenseCache> hidden;
  DenseCache output;    // output.preact = logits, output.output = probs

  const Matrix& probs() const { return output.output; }
  const Matrix& logits() const { return output.preact; }
};

ForwardCache forward(const ModelParams& p, const preprocess::PaddedBatch& batch);

/// Class distribution for one T x 6 input.
Vector model_forward(const ModelParams& p, const Matrix& x);

struct LossAndGrad {
  double loss = 0.0;  // mean over the batch
  ModelParams grads;
  Matrix probs;       // C x B
};

/// Mean categorical cross-entropy and its exact gradient.
LossAndGrad loss_and_gradient(const ModelParams& p, const preprocess::PaddedBatch& batch,
                              std::span<const int> labels);

/// Loss of a single T x 6 input.
double sample_loss(const ModelParams& p, const Matrix& x, int label);

/// Index of the first maximal entry.
int argmax_first(const Eigen::Ref<const Vector>& v);

}  // namespace strokesense::nn

#endif  // STROKESENSE_NN_MODEL_HPP
