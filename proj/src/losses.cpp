#include "gmix/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace gmix {

namespace {

Eigen::VectorXd clamp01(const Eigen::VectorXd& v) {
  return v.cwiseMax(kLossClamp).cwiseMin(1.0 - kLossClamp);
}

// Sum-1 normalization; the zero vector stays zero (pure surplus on the other
// side rather than fabricated undershoot wells).
Eigen::VectorXd normalize_or_zero(const Eigen::VectorXd& v) {
  const double s = v.sum();
  if (s <= 0.0) return Eigen::VectorXd::Zero(v.size());
  return v / s;
}

Eigen::VectorXd ngmg_weights(const KernelMatrix& kernel, const Eigen::VectorXd& from,
                             const Eigen::VectorXd& to) {
  Eigen::VectorXd l = (from - to).cwiseMin(0.0);
  return -(kernel.matrix() * l);
}

}  // namespace

LossValue shannon(const Eigen::VectorXd& p, const Eigen::VectorXd& p_hat) {
  if (p.size() != p_hat.size()) throw std::invalid_argument("shannon: length mismatch");
  const Eigen::VectorXd q = clamp01(p_hat);
  LossValue out;
  out.value = -(p.array() * q.array().log()).sum();
  out.gradient = (-(p.array() / q.array())).matrix();
  return out;
}

LossValue bce(const Eigen::VectorXd& targets, const Eigen::VectorXd& p_hat) {
  if (targets.size() != p_hat.size()) throw std::invalid_argument("bce: length mismatch");
  const int k = static_cast<int>(targets.size());
  const Eigen::VectorXd q = clamp01(p_hat);
  LossValue out;
  out.value = -(targets.array() * q.array().log() +
                (1.0 - targets.array()) * (1.0 - q.array()).log())
                   .sum() /
              k;
  out.gradient =
      ((-(targets.array() / q.array()) + (1.0 - targets.array()) / (1.0 - q.array())) / k)
          .matrix();
  return out;
}

LossValue ngmg_entropy(const Eigen::VectorXd& targets, const Eigen::VectorXd& p_hat,
                       const KernelMatrix& kernel, NgmgEntropyMode mode,
                       double lambda_floor) {
  if (targets.size() != p_hat.size())
    throw std::invalid_argument("ngmg_entropy: length mismatch");
  if (kernel.size() != targets.size())
    throw std::invalid_argument("ngmg_entropy: kernel dimension mismatch");

  const Eigen::VectorXd q = clamp01(p_hat);
  const Eigen::VectorXd t_norm = normalize_or_zero(targets);
  const Eigen::VectorXd p_norm = normalize_or_zero(q);

  // Undershoot weights: wells where normalized prediction sits below target.
  const Eigen::VectorXd w_up = ngmg_weights(kernel, p_norm, t_norm);

  LossValue out;
  if (mode == NgmgEntropyMode::literal) {
    out.value = (w_up.array() * (-q.array().log())).sum();
    out.gradient = (-(w_up.array() / q.array())).matrix();
    return out;
  }
  // Overshoot weights push mass back down through the (1 - p) log term.
  const Eigen::VectorXd w_down = ngmg_weights(kernel, t_norm, p_norm);
  const LossValue floor = bce(targets, p_hat);
  out.value = (w_up.array() * (-q.array().log())).sum() +
              (w_down.array() * (-(1.0 - q.array()).log())).sum() +
              lambda_floor * floor.value;
  out.gradient = (-(w_up.array() / q.array()) + w_down.array() / (1.0 - q.array()) +
                  lambda_floor * floor.gradient.array())
                     .matrix();
  return out;
}

}  // namespace gmix
