// Training losses with analytic gradients: Shannon cross-entropy, binary
// cross-entropy, and the NGMG-weighted entropy in literal and two-sided form.
#pragma once

#include <Eigen/Core>

#include "gmix/ngmg.hpp"

namespace gmix {

inline constexpr double kLossClamp = 1e-7;

struct LossValue {
  double value;
  Eigen::VectorXd gradient;  // d value / d prediction, elementwise
};

enum class NgmgEntropyMode { literal, two_sided };

LossValue shannon(const Eigen::VectorXd& p, const Eigen::VectorXd& p_hat);

LossValue bce(const Eigen::VectorXd& targets, const Eigen::VectorXd& p_hat);

// Targets and predictions are normalized to sum 1 for the weight computation
// only (all-zero targets normalize to the zero vector); the log terms act on
// the raw predictions. NGMG weights are constants w.r.t. the gradient.
LossValue ngmg_entropy(const Eigen::VectorXd& targets, const Eigen::VectorXd& p_hat,
                       const KernelMatrix& kernel,
                       NgmgEntropyMode mode = NgmgEntropyMode::two_sided,
                       double lambda_floor = 0.01);

}  // namespace gmix
