// SPDX-License-Identifier: Apache-2.0
#include "strokesense/nn/optimizer.hpp"

#include <cmath>

namespace strokesense::nn {

void RmsPropHyper::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
}

OptState make_opt_state(const ModelParams& params, const RmsPropHyper& hyper) {
  hyper.validate();
  return {ModelParams::zeros(params.config), hyper};
}

void rmsprop_update(std::span<double> theta, std::span<const double> grad, std::span<double> v,
                    const RmsPropHyper& hyper) {
  if (theta.size() != grad.size() || theta.size() != v.size()) {
    throw std::invalid_argument("shape mismatch: rmsprop arrays");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    v[i] = hyper.rho * v[i] + (1.0 - hyper.rho) * g * g;
    theta[i] -= hyper.learning_rate * g / (std::sqrt(v[i]) + hyper.epsilon);
  }
}

void rmsprop_update(ModelParams& params, const ModelParams& grads, OptState& state) {
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto v = state.v.tensors();
  if (p.size() != g.size() || p.size() != v.size()) {
    throw std::invalid_argument("shape mismatch: optimizer state");
  }
  for (std::size_t k = 0; k < p.size(); ++k) rmsprop_update(p[k], g[k], v[k], state.hyper);
}

double global_norm(const ModelParams& grads) {
  double sq = 0.0;
  for (const auto& t : grads.tensors()) {
    for (double x : t) sq += x * x;
  }
  return std::sqrt(sq);
}

double clip_global_norm(ModelParams& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto t : grads.tensors()) {
      for (double& x : t) x *= scale;
    }
  }
  return norm;
}

int TrainSample::label() const {
  Eigen::Index i = 0;
  y.maxCoeff(&i);
  return static_cast<int>(i);
}

TrainSample make_train_sample(const Matrix& scaled_6xT, int label, int num_classes,
                              std::string id) {
  if (label < 0 || label >= num_classes) throw std::invalid_argument("label out of range");
  TrainSample s;
  s.x = scaled_6xT.transpose();
  s.y = Vector::Zero(num_classes);
  s.y(label) = 1.0;
  s.id = std::move(id);
  return s;
}

StepResult train_step(ModelParams& params, OptState& opt, std::span<const TrainSample> batch,
                      double clip_norm) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<Matrix> items;
  std::vector<int> labels;
  items.reserve(batch.size());
  labels.reserve(batch.size());
  for (const auto& s : batch) {
    items.emplace_back(s.x.transpose());
    labels.push_back(s.label());
  }
  const auto padded = preprocess::pad_batch(items);
  LossAndGrad lg = loss_and_gradient(params, padded, labels);

  StepResult r;
  r.loss = lg.loss;
  r.grad_norm = clip_global_norm(lg.grads, clip_norm);
  if (!std::isfinite(r.loss) || !std::isfinite(r.grad_norm)) {
    std::vector<std::string> ids;
    for (const auto& s : batch) ids.push_back(s.id);
    throw DivergedError(std::move(ids));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (argmax_first(lg.probs.col(static_cast<Eigen::Index>(i))) == labels[i]) ++r.correct;
  }
  rmsprop_update(params, lg.grads, opt);
  return r;
}

}  // namespace strokesense::nn
