// SPDX-License-Identifier: Apache-2.0
#include "strokesense/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace strokesense::nn {

namespace {

using Array = Eigen::ArrayXXd;

Array hard_sigmoid_array(const Eigen::Ref<const Matrix>& z) {
  return (kHardSigmoidSlope * z.array() + 0.5).cwiseMax(0.0).cwiseMin(1.0);
}

Array hard_sigmoid_grad_array(const Eigen::Ref<const Matrix>& z) {
  return ((z.array() >= -kHardSigmoidKink) && (z.array() <= kHardSigmoidKink))
             .cast<double>() * kHardSigmoidSlope;
}

Array cell_apply(const Eigen::Ref<const Matrix>& z, CellActivation act) {
  return act == CellActivation::Tanh ? Array(z.array().tanh()) : hard_sigmoid_array(z);
}

// Derivative of the cell activation given its input z and output y.
Array cell_grad(const Eigen::Ref<const Matrix>& z, const Eigen::Ref<const Matrix>& y,
                CellActivation act) {
  return act == CellActivation::Tanh ? Array(1.0 - y.array().square())
                                     : hard_sigmoid_grad_array(z);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("shape mismatch: " + what);
}

}  // namespace

double hard_sigmoid(double x) {
  return std::clamp(kHardSigmoidSlope * x + 0.5, 0.0, 1.0);
}

double hard_sigmoid_grad(double x) {
  return (x >= -kHardSigmoidKink && x <= kHardSigmoidKink) ? kHardSigmoidSlope : 0.0;
}

LstmParams LstmParams::zeros(int input_dim, int hidden) {
  return {Matrix::Zero(4 * hidden, input_dim), Matrix::Zero(4 * hidden, hidden),
          Vector::Zero(4 * hidden)};
}

void LstmParams::check_shapes() const {
  const auto h = U.cols();
  require(U.rows() == 4 * h, "LSTM U must be 4H x H");
  require(W.rows() == 4 * h, "LSTM W must be 4H x D");
  require(b.size() == 4 * h, "LSTM b must have 4H entries");
}

LstmCache lstm_forward(const LstmParams& p, std::span<const Matrix> xs, const Matrix& h0,
                       const Matrix& c0, CellActivation act) {
  p.check_shapes();
  const Eigen::Index h = p.hidden();
  const Eigen::Index batch = h0.cols();
  require(h0.rows() == h && c0.rows() == h && c0.cols() == batch, "initial state must be H x B");

  LstmCache cache;
  cache.cell_activation = act;
  cache.h0 = h0;
  cache.c0 = c0;
  const std::size_t steps = xs.size();
  cache.inputs.reserve(steps);
  cache.preact.reserve(steps);
  cache.gates.reserve(steps);
  cache.cells.reserve(steps);
  cache.cell_out.reserve(steps);
  cache.hidden.reserve(steps);

  for (std::size_t t = 0; t < steps; ++t) {
    const Matrix& x = xs[t];
    require(x.rows() == p.input_dim() && x.cols() == batch, "LSTM input step must be D x B");
    const Matrix& h_prev = t == 0 ? h0 : cache.hidden.back();
    const Matrix& c_prev = t == 0 ? c0 : cache.cells.back();

    Matrix z = p.b.replicate(1, batch);
    z.noalias() += p.W * x;
    z.noalias() += p.U * h_prev;

    Matrix a(4 * h, batch);
    a.topRows(2 * h) = hard_sigmoid_array(z.topRows(2 * h)).matrix();
    a.middleRows(2 * h, h) = cell_apply(z.middleRows(2 * h, h), act).matrix();
    a.bottomRows(h) = hard_sigmoid_array(z.bottomRows(h)).matrix();

    Matrix c = (a.middleRows(h, h).array() * c_prev.array() +
                a.topRows(h).array() * a.middleRows(2 * h, h).array()).matrix();
    Matrix co = cell_apply(c, act).matrix();
    Matrix hid = (a.bottomRows(h).array() * co.array()).matrix();

    cache.inputs.push_back(x);
    cache.preact.push_back(std::move(z));
    cache.gates.push_back(std::move(a));
    cache.cells.push_back(std::move(c));
    cache.cell_out.push_back(std::move(co));
    cache.hidden.push_back(std::move(hid));
  }
  return cache;
}

LstmCache lstm_forward(const LstmParams& p, const Matrix& xs, CellActivation act) {
  std::vector<Matrix> steps;
  steps.reserve(static_cast<std::size_t>(xs.rows()));
  for (Eigen::Index t = 0; t < xs.rows(); ++t) steps.emplace_back(xs.row(t).transpose());
  const Matrix zero = Matrix::Zero(p.hidden(), 1);
  return lstm_forward(p, steps, zero, zero, act);
}

LstmGrads lstm_backward(const LstmParams& p, const LstmCache& cache,
                        std::span<const Matrix> d_hidden) {
  const int steps = cache.steps();
  require(static_cast<int>(d_hidden.size()) == steps, "one upstream gradient per step");
  const Eigen::Index h = p.hidden();
  const Eigen::Index batch = cache.h0.cols();

  LstmGrads g;
  g.params = LstmParams::zeros(p.input_dim(), static_cast<int>(h));
  g.d_inputs.resize(static_cast<std::size_t>(steps));
  Matrix dh_next = Matrix::Zero(h, batch);
  Matrix dc_next = Matrix::Zero(h, batch);
  Matrix dz(4 * h, batch);

  for (int t = steps - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    const Matrix& d_up = d_hidden[ts];
    if (d_up.size() != 0) {
      require(d_up.rows() == h && d_up.cols() == batch, "upstream gradient must be H x B");
      dh_next += d_up;
    }
    const Matrix& z = cache.preact[ts];
    const Matrix& a = cache.gates[ts];
    const Matrix& c_prev = t == 0 ? cache.c0 : cache.cells[ts - 1];
    const Matrix& h_prev = t == 0 ? cache.h0 : cache.hidden[ts - 1];
    const auto i_gate = a.topRows(h).array();
    const auto f_gate = a.middleRows(h, h).array();
    const auto g_cand = a.middleRows(2 * h, h).array();
    const auto o_gate = a.bottomRows(h).array();

    const Array dh = dh_next.array();
    const Array dc = dc_next.array() +
                     dh * o_gate * cell_grad(cache.cells[ts], cache.cell_out[ts], cache.cell_activation);

    dz.topRows(h) = (dc * g_cand * hard_sigmoid_grad_array(z.topRows(h))).matrix();
    dz.middleRows(h, h) = (dc * c_prev.array() * hard_sigmoid_grad_array(z.middleRows(h, h))).matrix();
    dz.middleRows(2 * h, h) =
        (dc * i_gate * cell_grad(z.middleRows(2 * h, h), a.middleRows(2 * h, h), cache.cell_activation)).matrix();
    dz.bottomRows(h) =
        (dh * cache.cell_out[ts].array() * hard_sigmoid_grad_array(z.bottomRows(h))).matrix();

    g.params.W.noalias() += dz * cache.inputs[ts].transpose();
    g.params.U.noalias() += dz * h_prev.transpose();
    g.params.b += dz.rowwise().sum();
    g.d_inputs[ts].noalias() = p.W.transpose() * dz;
    dh_next.noalias() = p.U.transpose() * dz;
    dc_next = (dc * f_gate).matrix();
  }
  g.d_h0 = std::move(dh_next);
  g.d_c0 = std::move(dc_next);
  return g;
}

DenseParams DenseParams::zeros(int in, int out, DenseActivation act) {
  return {Matrix::Zero(out, in), Vector::Zero(out), act};
}

void DenseParams::check_shapes() const {
  require(b.size() == W.rows(), "dense bias must match output rows");
}

Matrix softmax_columns(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - m).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

DenseCache dense_forward(const DenseParams& p, const Matrix& x) {
  p.check_shapes();
  require(x.rows() == p.W.cols(), "dense input rows must match W columns");
  DenseCache cache;
  cache.input = x;
  cache.preact = p.W * x;
  cache.preact.colwise() += p.b;
  switch (p.activation) {
    case DenseActivation::Identity: cache.output = cache.preact; break;
    case DenseActivation::ReLU: cache.output = cache.preact.cwiseMax(0.0); break;
    case DenseActivation::Softmax: cache.output = softmax_columns(cache.preact); break;
  }
  return cache;
}

DenseGrads dense_backward_preact(const DenseParams& p, const DenseCache& cache,
                                 const Matrix& d_preact) {
  require(d_preact.rows() == p.W.rows() && d_preact.cols() == cache.input.cols(),
          "dense upstream gradient must be out x B");
  DenseGrads g;
  g.params.activation = p.activation;
  g.params.W.noalias() = d_preact * cache.input.transpose();
  g.params.b = d_preact.rowwise().sum();
  g.d_input.noalias() = p.W.transpose() * d_preact;
  return g;
}

DenseGrads dense_backward(const DenseParams& p, const DenseCache& cache, const Matrix& d_out) {
  require(d_out.rows() == cache.output.rows() && d_out.cols() == cache.output.cols(),
          "dense upstream gradient must match output");
  Matrix dz;
  switch (p.activation) {
    case DenseActivation::Identity: dz = d_out; break;
    case DenseActivation::ReLU:
      dz = (d_out.array() * (cache.preact.array() > 0.0).cast<double>()).matrix();
      break;
    case DenseActivation::Softmax: {
      // Jacobian-vector product of the column softmax.
      const Eigen::RowVectorXd dots = (d_out.array() * cache.output.array()).colwise().sum();
      dz = (cache.output.array() * (d_out.rowwise() - dots).array()).matrix();
      break;
    }
  }
  return dense_backward_preact(p, cache, dz);
}

CrossEntropy softmax_cross_entropy(const Vector& logits, const Vector& one_hot) {
  if (logits.size() != one_hot.size()) throw std::invalid_argument("shape mismatch: logits vs label");
  CrossEntropy out;
  const double m = logits.maxCoeff();
  const Vector shifted = logits.array() - m;
  const double log_z = std::log(shifted.array().exp().sum());
  out.probs = (shifted.array() - log_z).exp().matrix();
  out.probs /= out.probs.sum();
  Eigen::Index target = 0;
  one_hot.maxCoeff(&target);
  out.loss = log_z - shifted(target);
  out.d_logits = out.probs - one_hot;
  return out;
}

}  // namespace strokesense::nn
