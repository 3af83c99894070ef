// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.hpp
 * @brief  LSTM and dense layers with exact reverse-mode gradients.
 *
 * All layers work on column batches: an input step is a D x B matrix.
 * LSTM gate blocks are stacked in the order i, f, g, o:
 *
 *   z_t = W x_t + U h_{t-1} + b
 *   i, f, o = hard_sigmoid(z_i), hard_sigmoid(z_f), hard_sigmoid(z_o)
 *   g = cell_act(z_g)
 *   c_t = f * c_{t-1} + i * g
 *   h_t = o * cell_act(c_t)
 *
 * cell_act is tanh unless the model is configured to use the hard sigmoid
 * everywhere.
 */
#ifndef STROKESENSE_NN_LAYERS_HPP
#define STROKESENSE_NN_LAYERS_HPP

#include <span>
#include <vector>

#include "strokesense/core_types.hpp"

namespace strokesense::nn {

inline constexpr double kHardSigmoidSlope = 0.2;
inline constexpr double kHardSigmoidKink = 2.5;

/// clamp(0.2 x + 0.5, 0, 1)
double hard_sigmoid(double x);
/// 0.2 on the closed interval [-2.5, 2.5] (interior slope at the kinks), else 0.
double hard_sigmoid_grad(double x);

enum class CellActivation { Tanh, HardSigmoid };

struct LstmParams {
  Matrix W;  // 4H x D
  Matrix U;  // 4H x H
  Vector b;  // 4H

  static LstmParams zeros(int input_dim, int hidden);
  int hidden() const { return static_cast<int>(U.cols()); }
  int input_dim() const { return static_cast<int>(W.cols()); }
  /// Throws std::invalid_argument when the shapes disagree.
  void check_shapes() const;
};

struct LstmCache {
  CellActivation cell_activation = CellActivation::Tanh;
  Matrix h0, c0;
  std::vector<Matrix> inputs;    // x_t, D x B
  std::vector<Matrix> preact;    // z_t, 4H x B
  std::vector<Matrix> gates;     // activated i, f, g, o
  std::vector<Matrix> cells;     // c_t
  std::vector<Matrix> cell_out;  // cell_act(c_t)
  std::vector<Matrix> hidden;    // h_t

  int steps() const { return static_cast<int>(inputs.size()); }
};

/// Runs the recurrence over every step. h0/c0 are H x B.
LstmCache lstm_forward(const LstmParams& p, std::span<const Matrix> xs, const Matrix& h0,
                       const Matrix& c0, CellActivation act = CellActivation::Tanh);
/// Single sequence form: xs is T x D, zero initial state.
LstmCache lstm_forward(const LstmParams& p, const Matrix& xs,
                       CellActivation act = CellActivation::Tanh);

struct LstmGrads {
  LstmParams params;
  std::vector<Matrix> d_inputs;
  Matrix d_h0, d_c0;
};

/// Backpropagation through time. d_hidden[t] is dL/dh_t (H x B); an empty
/// matrix stands for zero.
LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache,
                        std::span<const Matrix> d_hidden);

enum class DenseActivation { Identity, ReLU, Softmax };

struct DenseParams {
  Matrix W;  // out x in
  Vector b;  // out
  DenseActivation activation = DenseActivation::ReLU;

  static DenseParams zeros(int in, int out, DenseActivation act);
  void check_shapes() const;
};

struct DenseCache {
  Matrix input;   // in x B
  Matrix preact;  // out x B
  Matrix output;  // out x B
};

/// y = act(W x + b); softmax is applied per column.
DenseCache dense_forward(const DenseParams& p, const Matrix& x);

struct DenseGrads {
  DenseParams params;
  Matrix d_input;
};

/// Reverse mode from dL/dy. ReLU subgradient at 0 is 0.
DenseGrads dense_backward(const DenseParams& p, const DenseCache& cache, const Matrix& d_out);
/// Reverse mode from dL/dz (pre-activation), e.g. the fused softmax+CE gradient.
DenseGrads dense_backward_preact(const DenseParams& p, const DenseCache& cache,
                                 const Matrix& d_preact);

/// Column-wise max-subtracted softmax.
Matrix softmax_columns(const Matrix& logits);

struct CrossEntropy {
  double loss = 0.0;
  Vector d_logits;
  Vector probs;
};

/// loss = -log softmax(logits)[true]; d_logits = probs - y.
CrossEntropy softmax_cross_entropy(const Vector& logits, const Vector& one_hot);

}  // namespace strokesense::nn

#endif  // STROKESENSE_NN_LAYERS_HPP
