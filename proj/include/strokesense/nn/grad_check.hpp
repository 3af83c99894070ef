// SPDX-License-Identifier: Apache-2.0
/**
 * @file   grad_check.hpp
 * @brief  Central finite-difference verification of analytic gradients.
 *
 * Relative error per coordinate is |a - n| / max(|a|, |n|, 1e-8) with
 * n = (L(theta + h) - L(theta - h)) / 2h. A coordinate is skipped when either
 * perturbation moves any ReLU or hard-sigmoid pre-activation across a kink,
 * since the difference quotient is meaningless there.
 */
#ifndef STROKESENSE_NN_GRAD_CHECK_HPP
#define STROKESENSE_NN_GRAD_CHECK_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "strokesense/nn/model.hpp"
#include "strokesense/nn/optimizer.hpp"

namespace strokesense::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
};

double relative_error(double analytic, double numeric);

/// Linear-region id of every kinked activation input (empty when none).
using KinkPattern = std::vector<std::int8_t>;

struct Evaluation {
  long double loss = 0.0;
  KinkPattern pattern;
};

/// Generic checker. `params` are perturbed in place and restored; `evaluate`
/// returns the loss at the current parameters and its kink pattern.
GradCheckResult finite_difference_check(std::vector<std::span<double>> params,
                                        std::vector<std::span<const double>> analytic,
                                        const std::vector<std::string>& names,
                                        const std::function<Evaluation()>& evaluate, double h);

/// Region ids of every kinked pre-activation seen by one forward pass.
KinkPattern kink_pattern(const ModelParams& p, const ForwardCache& cache);

/// Loss of one T x 6 sample recomputed in long double, with its kink pattern.
/// Finite differences of gradients near 1e-8 need this headroom.
Evaluation extended_loss(const ModelParams& p, const Matrix& x, int label);

/// Full-model check on one sample. Gradient clipping plays no part here.
GradCheckResult grad_check(const ModelParams& p, const TrainSample& sample, double h = 1e-6);

}  // namespace strokesense::nn

#endif  // STROKESENSE_NN_GRAD_CHECK_HPP
