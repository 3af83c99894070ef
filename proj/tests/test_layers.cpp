// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "strokesense/nn/layers.hpp"
#include "oracles.hpp"
#include "strokesense/rng.hpp"

namespace strokesense::nn {
namespace {

using oracle::LD;
using oracle::random_lstm;
using oracle::uniform_matrix;
constexpr auto hs_oracle = oracle::hard_sigmoid;
constexpr auto lstm_oracle = oracle::lstm;
constexpr auto rel = oracle::relative_error;

TEST(HardSigmoid, ValuesAndGradient) {
  EXPECT_EQ(hard_sigmoid(0.0), 0.5);
  EXPECT_EQ(hard_sigmoid(2.5), 1.0);
  EXPECT_EQ(hard_sigmoid(-2.5), 0.0);
  EXPECT_EQ(hard_sigmoid(10.0), 1.0);
  EXPECT_EQ(hard_sigmoid(-3.0), 0.0);
  EXPECT_DOUBLE_EQ(hard_sigmoid(1.0), 0.7);
  EXPECT_EQ(hard_sigmoid_grad(0.0), 0.2);
  EXPECT_EQ(hard_sigmoid_grad(2.5), 0.2);
  EXPECT_EQ(hard_sigmoid_grad(-2.5), 0.2);
  EXPECT_EQ(hard_sigmoid_grad(2.6), 0.0);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-5, 5);
    EXPECT_NEAR(hard_sigmoid(x), static_cast<double>(hs_oracle(x)), 1e-15);
  }
}

class LstmForwardOracle : public ::testing::TestWithParam<CellActivation> {};

TEST_P(LstmForwardOracle, MatchesScalarLoopsOnEveryColumn) {
  const bool hard = GetParam() == CellActivation::HardSigmoid;
  Rng rng(2);
  const int D = 3, H = 5, T = 7, B = 4;
  const LstmParams p = random_lstm(rng, D, H, 0.8);
  std::vector<Matrix> xs;
  for (int t = 0; t < T; ++t) xs.push_back(uniform_matrix(rng, D, B, 1.0));
  const Matrix h0 = uniform_matrix(rng, H, B, 0.5), c0 = uniform_matrix(rng, H, B, 0.5);
  const LstmCache cache = lstm_forward(p, xs, h0, c0, GetParam());
  ASSERT_EQ(cache.steps(), T);
  for (int b = 0; b < B; ++b) {
    std::vector<std::vector<LD>> col(T, std::vector<LD>(D));
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < D; ++d) col[t][d] = xs[t](d, b);
    std::vector<LD> h(H), c(H);
    for (int j = 0; j < H; ++j) h[j] = h0(j, b), c[j] = c0(j, b);
    const auto want = lstm_oracle(p, col, h, c, hard);
    for (int t = 0; t < T; ++t)
      for (int j = 0; j < H; ++j) EXPECT_NEAR(cache.hidden[t](j, b), static_cast<double>(want[t][j]), 1e-13);
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, LstmForwardOracle,
                         ::testing::Values(CellActivation::Tanh, CellActivation::HardSigmoid));

TEST(LstmForward, SingleSequenceFormStartsFromZeroState) {
  Rng rng(3);
  const LstmParams p = random_lstm(rng, 6, 4, 0.5);
  const Matrix xs = uniform_matrix(rng, 9, 6, 1.0);  // T x D
  const LstmCache a = lstm_forward(p, xs);
  std::vector<Matrix> cols;
  for (int t = 0; t < 9; ++t) cols.push_back(xs.row(t).transpose());
  const LstmCache b = lstm_forward(p, cols, Matrix::Zero(4, 1), Matrix::Zero(4, 1));
  for (int t = 0; t < 9; ++t) EXPECT_EQ(a.hidden[t], b.hidden[t]);
}

TEST(LstmParams, ShapeChecks) {
  LstmParams p = LstmParams::zeros(3, 4);
  EXPECT_EQ(p.W.rows(), 16);
  EXPECT_EQ(p.W.cols(), 3);
  EXPECT_NO_THROW(p.check_shapes());
  p.b.resize(3);
  EXPECT_THROW(p.check_shapes(), std::invalid_argument);
}

using oracle::LstmProblem;

template <typename Target, typename Analytic>
double fd_max_error(LstmProblem& prob, Target& target, const Analytic& analytic, bool hard) {
  return oracle::fd_max_error(target, analytic, [&] { return prob.loss(hard); });
}

class LstmGradient : public ::testing::TestWithParam<CellActivation> {};

// D=3, H=4, T=5 with weights small enough that no hard-sigmoid input leaves
// (-2.5, 2.5), so the loss is smooth in every coordinate.
TEST_P(LstmGradient, BackpropMatchesFiniteDifferences) {
  const bool hard = GetParam() == CellActivation::HardSigmoid;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    const int D = 3, H = 4, T = 5;
    LstmProblem prob;
    prob.p = random_lstm(rng, D, H, 0.3);
    for (int t = 0; t < T; ++t) prob.xs.push_back(uniform_matrix(rng, D, 1, 1.0));
    prob.h0 = uniform_matrix(rng, H, 1, 0.5);
    prob.c0 = uniform_matrix(rng, H, 1, 0.5);
    for (int t = 0; t < T; ++t) prob.r.push_back(uniform_matrix(rng, H, 1, 1.0));

    const LstmCache cache = lstm_forward(prob.p, prob.xs, prob.h0, prob.c0, GetParam());
    for (const auto& z : cache.preact) ASSERT_LT(z.cwiseAbs().maxCoeff(), 2.5);
    const LstmGrads g = lstm_backward(prob.p, cache, prob.r);

    EXPECT_LT(fd_max_error(prob, prob.p.W, g.params.W, hard), 1e-5);
    EXPECT_LT(fd_max_error(prob, prob.p.U, g.params.U, hard), 1e-5);
    EXPECT_LT(fd_max_error(prob, prob.p.b, g.params.b, hard), 1e-5);
    EXPECT_LT(fd_max_error(prob, prob.h0, g.d_h0, hard), 1e-5);
    EXPECT_LT(fd_max_error(prob, prob.c0, g.d_c0, hard), 1e-5);
    for (int t = 0; t < T; ++t) EXPECT_LT(fd_max_error(prob, prob.xs[t], g.d_inputs[t], hard), 1e-5);
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, LstmGradient,
                         ::testing::Values(CellActivation::Tanh, CellActivation::HardSigmoid));

TEST(LstmBackward, EmptyUpstreamMeansZero) {
  Rng rng(4);
  const LstmParams p = random_lstm(rng, 2, 3, 0.3);
  std::vector<Matrix> xs{uniform_matrix(rng, 2, 1, 1), uniform_matrix(rng, 2, 1, 1)};
  const LstmCache cache = lstm_forward(p, xs, Matrix::Zero(3, 1), Matrix::Zero(3, 1));
  const Matrix r = uniform_matrix(rng, 3, 1, 1);
  const LstmGrads a = lstm_backward(p, cache, std::vector<Matrix>{Matrix(), r});
  const LstmGrads b = lstm_backward(p, cache, std::vector<Matrix>{Matrix::Zero(3, 1), r});
  EXPECT_TRUE(a.params.W.isApprox(b.params.W));
  EXPECT_TRUE(a.params.U.isApprox(b.params.U));
}

constexpr auto dense_oracle_loss = oracle::dense_loss;

class DenseGradient : public ::testing::TestWithParam<DenseActivation> {};

TEST_P(DenseGradient, BackpropMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(200 + seed);
    DenseParams p;
    p.W = uniform_matrix(rng, 5, 4, 1.0);
    p.b = uniform_matrix(rng, 5, 1, 1.0);
    p.activation = GetParam();
    Matrix x = uniform_matrix(rng, 4, 1, 1.0);
    const Matrix r = uniform_matrix(rng, 5, 1, 1.0);
    const DenseCache cache = dense_forward(p, x);
    // Keep ReLU inputs away from the kink.
    if (GetParam() == DenseActivation::ReLU && cache.preact.cwiseAbs().minCoeff() < 1e-3) continue;
    const DenseGrads g = dense_backward(p, cache, r);
    const double h = 1e-6;
    auto check = [&](Matrix& target, const Matrix& analytic) {
      for (Eigen::Index i = 0; i < target.size(); ++i) {
        const double saved = target.data()[i];
        target.data()[i] = saved + h;
        const LD up = dense_oracle_loss(p, x, r);
        const double hi = target.data()[i];
        target.data()[i] = saved - h;
        const LD down = dense_oracle_loss(p, x, r);
        const double lo = target.data()[i];
        target.data()[i] = saved;
        const double n = static_cast<double>((up - down) / (static_cast<LD>(hi) - static_cast<LD>(lo)));
        EXPECT_LT(rel(analytic.data()[i], n), 1e-6) << "index " << i;
      }
    };
    check(p.W, g.params.W);
    check(x, g.d_input);
    // Bias through a Matrix view of the vector.
    for (Eigen::Index i = 0; i < p.b.size(); ++i) {
      const double saved = p.b(i);
      p.b(i) = saved + h;
      const LD up = dense_oracle_loss(p, x, r);
      p.b(i) = saved - h;
      const LD down = dense_oracle_loss(p, x, r);
      p.b(i) = saved;
      EXPECT_LT(rel(g.params.b(i), static_cast<double>((up - down) / (2 * static_cast<LD>(h)))), 1e-6);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Activations, DenseGradient,
                         ::testing::Values(DenseActivation::Identity, DenseActivation::ReLU,
                                           DenseActivation::Softmax));

TEST(Dense, BatchColumnsAreIndependent) {
  Rng rng(5);
  DenseParams p = DenseParams::zeros(3, 2, DenseActivation::ReLU);
  p.W = uniform_matrix(rng, 2, 3, 1);
  p.b = uniform_matrix(rng, 2, 1, 1);
  const Matrix x = uniform_matrix(rng, 3, 6, 1);
  const DenseCache all = dense_forward(p, x);
  for (int b = 0; b < 6; ++b) EXPECT_TRUE(all.output.col(b).isApprox(dense_forward(p, x.col(b)).output));
}

TEST(Softmax, StableAndNormalized) {
  Matrix logits(3, 2);
  logits << 1000, -1000, 0, 0, -1000, 1000;
  const Matrix p = softmax_columns(logits);
  EXPECT_TRUE(p.allFinite());
  EXPECT_NEAR(p(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(p(2, 1), 1.0, 1e-15);
  EXPECT_NEAR(p.col(0).sum(), 1.0, 1e-15);
}

TEST(SoftmaxCrossEntropy, LossAndGradient) {
  Vector logits(3);
  logits << 1.0, 2.0, 3.0;
  Vector y = Vector::Zero(3);
  y(1) = 1;
  const CrossEntropy ce = softmax_cross_entropy(logits, y);
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(ce.loss, -std::log(std::exp(2.0) / z), 1e-14);
  EXPECT_NEAR(ce.d_logits(0), std::exp(1.0) / z, 1e-14);
  EXPECT_NEAR(ce.d_logits(1), std::exp(2.0) / z - 1.0, 1e-14);
  // Uniform logits over C classes cost log C.
  const CrossEntropy u = softmax_cross_entropy(Vector::Zero(4), Vector::Unit(4, 0));
  EXPECT_NEAR(u.loss, std::log(4.0), 1e-15);
  // Extreme logits stay finite.
  Vector big(2);
  big << 800, -800;
  EXPECT_TRUE(std::isfinite(softmax_cross_entropy(big, Vector::Unit(2, 1)).loss));
}

}  // namespace
}  // namespace strokesense::nn
