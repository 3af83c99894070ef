// SPDX-License-Identifier: Apache-2.0
#include "strokesense/nn/model.hpp"

#include <cmath>
#include <stdexcept>

#include "strokesense/rng.hpp"

namespace strokesense::nn {

void ModelConfig::validate() const {
  if (num_classes < 2) throw std::invalid_argument("model needs at least 2 classes");
  if (input_dim < 1 || lstm1_units < 1 || lstm2_units < 1 || dense_units < 1) {
    throw std::invalid_argument("layer sizes must be positive");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.lstm1 = LstmParams::zeros(config.input_dim, config.lstm1_units);
  p.lstm2 = LstmParams::zeros(config.lstm1_units, config.lstm2_units);
  p.hidden.push_back(DenseParams::zeros(config.lstm2_units, config.dense_units, DenseActivation::ReLU));
  if (config.extra_dense) {
    p.hidden.push_back(DenseParams::zeros(config.dense_units, config.dense_units, DenseActivation::ReLU));
  }
  p.output = DenseParams::zeros(config.dense_units, config.num_classes, DenseActivation::Softmax);
  return p;
}

namespace {

template <typename Span, typename Self>
std::vector<Span> collect_tensors(Self& p) {
  std::vector<Span> out;
  auto add = [&](auto& m) { out.emplace_back(m.data(), static_cast<std::size_t>(m.size())); };
  for (auto* l : {&p.lstm1, &p.lstm2}) {
    add(l->W);
    add(l->U);
    add(l->b);
  }
  for (auto& d : p.hidden) {
    add(d.W);
    add(d.b);
  }
  add(p.output.W);
  add(p.output.b);
  return out;
}

}  // namespace

std::vector<std::span<double>> ModelParams::tensors() {
  return collect_tensors<std::span<double>>(*this);
}

std::vector<std::span<const double>> ModelParams::tensors() const {
  return collect_tensors<std::span<const double>>(*this);
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> names = {"lstm1.W", "lstm1.U", "lstm1.b", "lstm2.W", "lstm2.U", "lstm2.b"};
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    names.push_back("dense" + std::to_string(i + 1) + ".W");
    names.push_back("dense" + std::to_string(i + 1) + ".b");
  }
  names.push_back("output.W");
  names.push_back("output.b");
  return names;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += t.size();
  return n;
}

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = ModelParams::zeros(config);
  Rng rng(seed);
  auto glorot = [&](Matrix& w, Eigen::Index fan_in, Eigen::Index fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-s, s);
    }
  };
  for (auto* l : {&p.lstm1, &p.lstm2}) {
    const Eigen::Index h = l->hidden();
    glorot(l->W, l->W.cols(), 4 * h);
    glorot(l->U, h, 4 * h);
    l->b.segment(h, h).setOnes();
  }
  for (auto& d : p.hidden) glorot(d.W, d.W.cols(), d.W.rows());
  glorot(p.output.W, p.output.W.cols(), p.output.W.rows());
  return p;
}

ForwardCache forward(const ModelParams& p, const preprocess::PaddedBatch& batch) {
  if (batch.batch_size() == 0 || batch.max_len() == 0) throw std::invalid_argument("empty batch");
  const Eigen::Index b = batch.batch_size();
  ForwardCache cache;
  cache.lengths = batch.lengths;
  const CellActivation act = p.cell_activation();

  const Matrix h1 = Matrix::Zero(p.lstm1.hidden(), b);
  cache.lstm1 = lstm_forward(p.lstm1, batch.steps, h1, h1, act);
  const Matrix h2 = Matrix::Zero(p.lstm2.hidden(), b);
  cache.lstm2 = lstm_forward(p.lstm2, cache.lstm1.hidden, h2, h2, act);

  cache.final_hidden.resize(p.lstm2.hidden(), b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const int len = batch.lengths[static_cast<std::size_t>(i)];
    if (len < 1 || len > batch.max_len()) throw std::invalid_argument("bad sequence length");
    cache.final_hidden.col(i) = cache.lstm2.hidden[static_cast<std::size_t>(len - 1)].col(i);
  }

  const Matrix* x = &cache.final_hidden;
  cache.hidden.reserve(p.hidden.size());
  for (const auto& d : p.hidden) {
    cache.hidden.push_back(dense_forward(d, *x));
    x = &cache.hidden.back().output;
  }
  cache.output = dense_forward(p.output, *x);
  return cache;
}

namespace {

preprocess::PaddedBatch single(const Matrix& x) {
  if (x.rows() < 1) throw std::invalid_argument("input must have at least one timestep");
  preprocess::PaddedBatch batch;
  batch.lengths = {static_cast<int>(x.rows())};
  for (Eigen::Index t = 0; t < x.rows(); ++t) batch.steps.emplace_back(x.row(t).transpose());
  return batch;
}

}  // namespace

Vector model_forward(const ModelParams& p, const Matrix& x) {
  return forward(p, single(x)).probs().col(0);
}

LossAndGrad loss_and_gradient(const ModelParams& p, const preprocess::PaddedBatch& batch,
                              std::span<const int> labels) {
  const Eigen::Index b = batch.batch_size();
  if (static_cast<Eigen::Index>(labels.size()) != b) throw std::invalid_argument("one label per item");
  ForwardCache cache = forward(p, batch);
  const Matrix& probs = cache.probs();
  const Matrix& logits = cache.logits();

  LossAndGrad out;
  Matrix d_logits = probs;
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= p.config.num_classes) throw std::invalid_argument("label out of range");
    const double m = logits.col(i).maxCoeff();
    const double log_z = m + std::log((logits.col(i).array() - m).exp().sum());
    total += log_z - logits(y, i);
    d_logits(y, i) -= 1.0;
  }
  out.loss = total / static_cast<double>(b);
  d_logits /= static_cast<double>(b);

  out.grads = ModelParams::zeros(p.config);
  DenseGrads g_out = dense_backward_preact(p.output, cache.output, d_logits);
  out.grads.output.W = std::move(g_out.params.W);
  out.grads.output.b = std::move(g_out.params.b);
  Matrix d_x = std::move(g_out.d_input);
  for (std::size_t k = p.hidden.size(); k-- > 0;) {
    DenseGrads g = dense_backward(p.hidden[k], cache.hidden[k], d_x);
    out.grads.hidden[k].W = std::move(g.params.W);
    out.grads.hidden[k].b = std::move(g.params.b);
    d_x = std::move(g.d_input);
  }

  // Inject the head gradient at each item's final step only.
  const auto steps = static_cast<std::size_t>(batch.max_len());
  std::vector<Matrix> d_h2(steps);
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto t = static_cast<std::size_t>(batch.lengths[static_cast<std::size_t>(i)] - 1);
    if (d_h2[t].size() == 0) d_h2[t] = Matrix::Zero(p.lstm2.hidden(), b);
    d_h2[t].col(i) = d_x.col(i);
  }
  LstmGrads g2 = lstm_backward(p.lstm2, cache.lstm2, d_h2);
  LstmGrads g1 = lstm_backward(p.lstm1, cache.lstm1, g2.d_inputs);
  out.grads.lstm2 = std::move(g2.params);
  out.grads.lstm1 = std::move(g1.params);
  out.probs = probs;
  return out;
}

double sample_loss(const ModelParams& p, const Matrix& x, int label) {
  const ForwardCache cache = forward(p, single(x));
  const Vector logits = cache.logits().col(0);
  const double m = logits.maxCoeff();
  return m + std::log((logits.array() - m).exp().sum()) - logits(label);
}

int argmax_first(const Eigen::Ref<const Vector>& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace strokesense::nn
