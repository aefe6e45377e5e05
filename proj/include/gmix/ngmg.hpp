// Negative Gaussian mixture gradient: the clamped-negative weight difference
// smoothed by a zero-diagonal Gaussian kernel, plus executable forms of the
// W1 identity and the convergence equivalence it satisfies.
#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "gmix/basis.hpp"
#include "gmix/metrics.hpp"

namespace gmix {

class DeficitVector {
 public:
  explicit DeficitVector(Eigen::VectorXd values);
  const Eigen::VectorXd& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double l1_norm() const { return values_.cwiseAbs().sum(); }

 private:
  Eigen::VectorXd values_;
};

class KernelMatrix {
 public:
  KernelMatrix(const Eigen::VectorXd& means, double kernel_scale);
  const Eigen::MatrixXd& matrix() const { return m_; }
  double kernel_scale() const { return kernel_scale_; }
  int size() const { return static_cast<int>(m_.rows()); }
  double max_entry() const { return m_.maxCoeff(); }
  // Induced 1-norm (max column sum); the Lipschitz constant of L -> M L.
  double one_norm() const { return m_.colwise().sum().maxCoeff(); }

 private:
  Eigen::MatrixXd m_;
  double kernel_scale_;
};

struct IllConditionedKernel : std::runtime_error {
  using std::runtime_error::runtime_error;
};

DeficitVector deficit(const WeightVector& p, const WeightVector& q);

// Kernel scale defaults to 2x component spacing when not given.
KernelMatrix kernel(const Basis& basis, double kernel_scale);

Eigen::VectorXd ngmg_gradient(const KernelMatrix& kernel, const DeficitVector& l);

// Recovers W1 from the NGMG fields through a numeric kernel solve; must agree
// with w1_vectorized (the inverse cancels the kernel analytically).
double prop2_w1(const Basis& basis, const KernelMatrix& kernel, const WeightVector& p,
                const WeightVector& q, int grid_points = kDefaultQuadraturePoints);

struct ConvergenceReport {
  std::vector<double> w1;
  std::vector<double> ngmg_norm;
  double w1_tolerance;
  double ngmg_tolerance;
  bool w1_converged;
  bool ngmg_converged;
  bool equivalent;  // both converged or both did not
};

ConvergenceReport prop3_convergence_check(const Basis& basis, const KernelMatrix& kernel,
                                          const std::vector<WeightVector>& sequence,
                                          const WeightVector& target,
                                          double w1_tolerance = 1e-6);

}  // namespace gmix
