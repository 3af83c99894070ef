// SPDX-License-Identifier: Apache-2.0
/**
 * @file   optimizer.hpp
 * @brief  RMSprop and the minibatch training step.
 *
 * Per parameter: v <- rho * v + (1 - rho) * g^2;  theta <- theta - lr * g / (sqrt(v) + eps)
 */
#ifndef STROKESENSE_NN_OPTIMIZER_HPP
#define STROKESENSE_NN_OPTIMIZER_HPP

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "strokesense/nn/model.hpp"

namespace strokesense::nn {

struct RmsPropHyper {
  double learning_rate = 0.001;
  double rho = 0.9;
  double epsilon = 1e-8;

  void validate() const;
};

struct OptState {
  ModelParams v;  // running mean of squared gradients
  RmsPropHyper hyper;
};

OptState make_opt_state(const ModelParams& params, const RmsPropHyper& hyper = {});

/// One RMSprop update over flat arrays of equal length.
void rmsprop_update(std::span<double> theta, std::span<const double> grad, std::span<double> v,
                    const RmsPropHyper& hyper);
void rmsprop_update(ModelParams& params, const ModelParams& grads, OptState& state);

double global_norm(const ModelParams& grads);
/// Rescales grads to `max_norm` when their global norm exceeds it; returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double clip_global_norm(ModelParams& grads, double max_norm);

struct TrainSample {
  Matrix x;  // T x 6, scaled
  Vector y;  // one-hot, length C
  std::string id;

  int label() const;
};

/// Builds a TrainSample from a 6 x T scaled matrix.
TrainSample make_train_sample(const Matrix& scaled_6xT, int label, int num_classes,
                              std::string id = {});

/// Raised when a batch produces a non-finite loss or gradient.
class DivergedError : public std::runtime_error {
 public:
  DivergedError(std::vector<std::string> batch_ids)
      : std::runtime_error("diverged"), batch_ids_(std::move(batch_ids)) {}
  const std::vector<std::string>& batch_ids() const { return batch_ids_; }

 private:
  std::vector<std::string> batch_ids_;
};

struct StepResult {
  double loss = 0.0;   // mean over the batch, before the update
  int correct = 0;     // argmax hits before the update
  double grad_norm = 0.0;
};

/// Forward, backward, optional global-norm clipping, RMSprop update. The
/// parameters are left untouched when DivergedError is thrown.
StepResult train_step(ModelParams& params, OptState& opt, std::span<const TrainSample> batch,
                      double clip_norm = 5.0);

}  // namespace strokesense::nn

#endif  // STROKESENSE_NN_OPTIMIZER_HPP
