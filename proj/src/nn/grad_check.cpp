// SPDX-License-Identifier: Apache-2.0
#include "strokesense/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strokesense::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult finite_difference_check(std::vector<std::span<double>> params,
                                        std::vector<std::span<const double>> analytic,
                                        const std::vector<std::string>& names,
                                        const std::function<Evaluation()>& evaluate, double h) {
  if (params.size() != analytic.size()) throw std::invalid_argument("shape mismatch: gradient tensors");
  if (!(h > 0.0)) throw std::invalid_argument("step must be positive");
  GradCheckResult r;
  const KinkPattern base = evaluate().pattern;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size() != analytic[k].size()) throw std::invalid_argument("shape mismatch: gradient tensor");
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      double& theta = params[k][i];
      const double saved = theta;
      theta = saved + h;
      const Evaluation up = evaluate();
      theta = saved - h;
      const Evaluation down = evaluate();
      theta = saved;
      if (up.pattern != base || down.pattern != base) {
        ++r.skipped;
        continue;
      }
      // The stored step is what θ ± h rounded to.
      const long double step = static_cast<long double>(saved + h) - static_cast<long double>(saved - h);
      const auto numeric = static_cast<double>((up.loss - down.loss) / step);
      const double err = relative_error(analytic[k][i], numeric);
      ++r.checked;
      if (err > r.max_rel_error) {
        r.max_rel_error = err;
        r.worst_tensor = k < names.size() ? names[k] : std::to_string(k);
        r.worst_index = i;
      }
    }
  }
  return r;
}

namespace {

std::int8_t hard_sigmoid_region(double z) {
  return z < -kHardSigmoidKink ? 0 : (z > kHardSigmoidKink ? 2 : 1);
}

void append_lstm(KinkPattern& out, const LstmCache& cache) {
  const bool everywhere = cache.cell_activation == CellActivation::HardSigmoid;
  for (int t = 0; t < cache.steps(); ++t) {
    const Matrix& z = cache.preact[static_cast<std::size_t>(t)];
    const Eigen::Index h = z.rows() / 4;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const bool candidate = i >= 2 * h && i < 3 * h;
        if (!candidate || everywhere) out.push_back(hard_sigmoid_region(z(i, j)));
      }
    }
    if (everywhere) {
      const Matrix& c = cache.cells[static_cast<std::size_t>(t)];
      for (Eigen::Index i = 0; i < c.size(); ++i) out.push_back(hard_sigmoid_region(c.data()[i]));
    }
  }
}

}  // namespace

KinkPattern kink_pattern(const ModelParams& p, const ForwardCache& cache) {
  KinkPattern out;
  append_lstm(out, cache.lstm1);
  append_lstm(out, cache.lstm2);
  for (std::size_t k = 0; k < p.hidden.size(); ++k) {
    const Matrix& z = cache.hidden[k].preact;
    for (Eigen::Index i = 0; i < z.size(); ++i) out.push_back(z.data()[i] > 0.0 ? 1 : 0);
  }
  return out;
}

namespace {

using XMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using XVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

long double x_hard_sigmoid(long double z) {
  return std::clamp(0.2L * z + 0.5L, 0.0L, 1.0L);
}

// Single-sequence LSTM in long double; appends kink regions like append_lstm.
XMatrix x_lstm(const LstmParams& p, const XMatrix& x, bool everywhere, KinkPattern& pattern) {
  const XMatrix W = p.W.cast<long double>();
  const XMatrix U = p.U.cast<long double>();
  const XVector b = p.b.cast<long double>();
  const Eigen::Index h = p.hidden();
  auto cell_act = [&](long double v) { return everywhere ? x_hard_sigmoid(v) : std::tanh(v); };
  XVector hs = XVector::Zero(h), cs = XVector::Zero(h);
  XMatrix out(h, x.cols());
  for (Eigen::Index t = 0; t < x.cols(); ++t) {
    const XVector z = W * x.col(t) + U * hs + b;
    for (Eigen::Index i = 0; i < 4 * h; ++i) {
      const bool candidate = i >= 2 * h && i < 3 * h;
      if (!candidate || everywhere) pattern.push_back(hard_sigmoid_region(static_cast<double>(z(i))));
    }
    for (Eigen::Index i = 0; i < h; ++i) {
      const long double ig = x_hard_sigmoid(z(i));
      const long double fg = x_hard_sigmoid(z(h + i));
      const long double gg = cell_act(z(2 * h + i));
      const long double og = x_hard_sigmoid(z(3 * h + i));
      cs(i) = fg * cs(i) + ig * gg;
      hs(i) = og * cell_act(cs(i));
    }
    if (everywhere) {
      for (Eigen::Index i = 0; i < h; ++i) pattern.push_back(hard_sigmoid_region(static_cast<double>(cs(i))));
    }
    out.col(t) = hs;
  }
  return out;
}

}  // namespace

Evaluation extended_loss(const ModelParams& p, const Matrix& x, int label) {
  Evaluation e;
  const bool everywhere = p.config.hard_sigmoid_everywhere;
  const XMatrix h1 = x_lstm(p.lstm1, x.transpose().cast<long double>(), everywhere, e.pattern);
  const XMatrix h2 = x_lstm(p.lstm2, h1, everywhere, e.pattern);
  XVector a = h2.col(h2.cols() - 1);
  for (const auto& d : p.hidden) {
    const XVector z = d.W.cast<long double>() * a + d.b.cast<long double>();
    for (Eigen::Index i = 0; i < z.size(); ++i) e.pattern.push_back(z(i) > 0.0L ? 1 : 0);
    a = z.cwiseMax(0.0L);
  }
  const XVector logits = p.output.W.cast<long double>() * a + p.output.b.cast<long double>();
  const long double m = logits.maxCoeff();
  e.loss = m + std::log((logits.array() - m).exp().sum()) - logits(label);
  return e;
}

GradCheckResult grad_check(const ModelParams& p, const TrainSample& sample, double h) {
  ModelParams work = p;
  const int label = sample.label();
  preprocess::PaddedBatch batch;
  batch.lengths = {static_cast<int>(sample.x.rows())};
  for (Eigen::Index t = 0; t < sample.x.rows(); ++t) batch.steps.emplace_back(sample.x.row(t).transpose());

  const std::vector<int> labels{label};
  const LossAndGrad lg = loss_and_gradient(work, batch, labels);
  return finite_difference_check(work.tensors(), lg.grads.tensors(), work.tensor_names(),
                                 [&] { return extended_loss(work, sample.x, label); }, h);
}

}  // namespace strokesense::nn
