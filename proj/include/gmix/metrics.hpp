// 1-Wasserstein distance between expansion weight vectors: quadrature form,
// vectorized sign-split form, and a sorted-sample empirical estimate.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "gmix/basis.hpp"

namespace gmix {

inline constexpr int kDefaultQuadraturePoints = 2048;

// Diagonal 0/1 split by the sign of p - q; ties (difference == 0) take 1.
struct SignSplit {
  std::vector<std::uint8_t> b;
};

SignSplit sign_split(const WeightVector& p, const WeightVector& q);

// a[n] = integral of the n-th component CDF over the basis support.
// Strictly decreasing in n: later components rise later, so less CDF mass.
class CdfIntegrals {
 public:
  CdfIntegrals(const Basis& basis, int grid_points = kDefaultQuadraturePoints);
  const Eigen::VectorXd& values() const { return a_; }

 private:
  Eigen::VectorXd a_;
};

double w1_integral(const Basis& basis, const WeightVector& p, const WeightVector& q,
                   int grid_points = kDefaultQuadraturePoints);

double w1_vectorized(const Basis& basis, const WeightVector& p, const WeightVector& q,
                     int grid_points = kDefaultQuadraturePoints);

double w1_vectorized(const CdfIntegrals& integrals, const WeightVector& p,
                     const WeightVector& q);

// Quantile-coupling estimate from samples: sort both sets, evaluate both
// empirical quantile functions on a common grid, average |difference|.
double w1_empirical(std::vector<double> samples_p, std::vector<double> samples_q);

}  // namespace gmix
