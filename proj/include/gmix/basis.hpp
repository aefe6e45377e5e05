// Fixed Gaussian-mixture expansion basis: evenly spaced component means with a
// shared scale; only the mixture weights are ever learned.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "gmix/rng.hpp"

namespace gmix {

double normal_pdf(double x, double mean, double stddev);
double normal_cdf(double x, double mean, double stddev);

class Basis {
 public:
  Basis(int n_components, Eigen::VectorXd means, double scale, double support_lo,
        double support_hi);

  int size() const { return n_components_; }
  const Eigen::VectorXd& means() const { return means_; }
  double scale() const { return scale_; }
  double support_lo() const { return support_lo_; }
  double support_hi() const { return support_hi_; }
  double spacing() const;

  double component_pdf(int n, double x) const;
  double component_cdf(int n, double x) const;

 private:
  int n_components_;
  Eigen::VectorXd means_;
  double scale_;
  double support_lo_;
  double support_hi_;
};

class WeightVector {
 public:
  explicit WeightVector(Eigen::VectorXd weights);

  int size() const { return static_cast<int>(values_.size()); }
  const Eigen::VectorXd& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }

  static WeightVector uniform(int n);
  static WeightVector one_hot(int n, int index);

 private:
  Eigen::VectorXd values_;
};

struct FitResult {
  WeightVector weights;
  bool degenerate;  // all component likelihoods underflowed; uniform fallback
};

Basis build_basis(int n_components, double data_min, double data_max, double scale,
                  double support_pad = 4.0);

FitResult fit_weights(const Basis& basis, const std::vector<double>& data);

double density_at(const Basis& basis, const WeightVector& weights, double x);

// Draws from the mixture; used by the empirical W1 oracle and the CLI.
std::vector<double> sample_mixture(const Basis& basis, const WeightVector& weights,
                                   std::size_t n, Rng& rng);

}  // namespace gmix
