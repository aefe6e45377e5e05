#include "gmix/ngmg.hpp"

#include <Eigen/LU>
#include <cmath>

namespace gmix {

DeficitVector::DeficitVector(Eigen::VectorXd values) : values_(std::move(values)) {
  for (int i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] > 0.0)
      throw std::invalid_argument("deficit: entries must be finite and <= 0");
  }
}

KernelMatrix::KernelMatrix(const Eigen::VectorXd& means, double kernel_scale)
    : kernel_scale_(kernel_scale) {
  if (!(kernel_scale > 0.0)) throw std::invalid_argument("kernel: scale must be positive");
  const int n = static_cast<int>(means.size());
  m_.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      m_(j, i) = i == j ? 0.0 : normal_pdf(means[j], means[i], kernel_scale);
    }
  }
}

DeficitVector deficit(const WeightVector& p, const WeightVector& q) {
  if (p.size() != q.size()) throw std::invalid_argument("deficit: length mismatch");
  Eigen::VectorXd v = (p.values() - q.values()).cwiseMin(0.0);
  return DeficitVector(std::move(v));
}

KernelMatrix kernel(const Basis& basis, double kernel_scale) {
  return KernelMatrix(basis.means(), kernel_scale);
}

Eigen::VectorXd ngmg_gradient(const KernelMatrix& kernel, const DeficitVector& l) {
  if (kernel.size() != l.size())
    throw std::invalid_argument("ngmg_gradient: dimension mismatch");
  return -(kernel.matrix() * l.values());
}

double prop2_w1(const Basis& basis, const KernelMatrix& kernel, const WeightVector& p,
                const WeightVector& q, int grid_points) {
  if (kernel.size() != basis.size())
    throw std::invalid_argument("prop2_w1: kernel/basis size mismatch");
  const SignSplit split = sign_split(p, q);
  const Eigen::VectorXd delta = p.values() - q.values();
  Eigen::VectorXd l_pos(delta.size()), l_neg(delta.size());
  for (int i = 0; i < delta.size(); ++i) {
    l_pos[i] = split.b[i] ? -delta[i] : 0.0;
    l_neg[i] = split.b[i] ? 0.0 : delta[i];
  }
  const Eigen::VectorXd g_pos = ngmg_gradient(kernel, DeficitVector(l_pos));
  const Eigen::VectorXd g_neg = ngmg_gradient(kernel, DeficitVector(l_neg));

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(kernel.matrix());
  const double rcond = lu.rcond();
  if (!(rcond > 1e-12))
    throw IllConditionedKernel("prop2_w1: kernel condition estimate exceeds 1e12");
  const Eigen::VectorXd y_pos = lu.solve(g_pos);
  const Eigen::VectorXd y_neg = lu.solve(g_neg);

  const CdfIntegrals integrals(basis, grid_points);
  const Eigen::VectorXd& a = integrals.values();
  const double pos = (a.array() * y_pos.array()).abs().sum();
  const double neg = (a.array() * y_neg.array()).abs().sum();
  return std::abs(pos - neg);
}

ConvergenceReport prop3_convergence_check(const Basis& basis, const KernelMatrix& kernel,
                                          const std::vector<WeightVector>& sequence,
                                          const WeightVector& target,
                                          double w1_tolerance) {
  if (sequence.empty())
    throw std::invalid_argument("prop3_convergence_check: empty sequence");
  ConvergenceReport report;
  report.w1_tolerance = w1_tolerance;
  report.ngmg_tolerance = w1_tolerance * kernel.max_entry() * kernel.size();
  for (const WeightVector& p : sequence) {
    report.w1.push_back(w1_integral(basis, p, target));
    report.ngmg_norm.push_back(
        ngmg_gradient(kernel, deficit(p, target)).cwiseAbs().sum());
  }
  report.w1_converged = report.w1.back() < report.w1_tolerance;
  report.ngmg_converged = report.ngmg_norm.back() < report.ngmg_tolerance;
  report.equivalent = report.w1_converged == report.ngmg_converged;
  return report;
}

}  // namespace gmix
