#include "gmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmix {

namespace {

// Uniform-grid trapezoid weights applied to per-point values.
double trapezoid(const Eigen::VectorXd& f, double dx) {
  const int n = static_cast<int>(f.size());
  return dx * (f.sum() - 0.5 * (f[0] + f[n - 1]));
}

}  // namespace

SignSplit sign_split(const WeightVector& p, const WeightVector& q) {
  if (p.size() != q.size()) throw std::invalid_argument("sign_split: size mismatch");
  SignSplit s;
  s.b.resize(p.size());
  for (int i = 0; i < p.size(); ++i) s.b[i] = p[i] - q[i] >= 0.0 ? 1 : 0;
  return s;
}

CdfIntegrals::CdfIntegrals(const Basis& basis, int grid_points) {
  if (grid_points < 2) throw std::invalid_argument("cdf_integrals: grid too small");
  const double lo = basis.support_lo();
  const double hi = basis.support_hi();
  const double dx = (hi - lo) / (grid_points - 1);
  a_.resize(basis.size());
  Eigen::VectorXd f(grid_points);
  for (int n = 0; n < basis.size(); ++n) {
    for (int g = 0; g < grid_points; ++g) f[g] = basis.component_cdf(n, lo + g * dx);
    a_[n] = trapezoid(f, dx);
  }
  for (int n = 0; n + 1 < basis.size(); ++n) {
    if (!(a_[n] > a_[n + 1]))
      throw std::runtime_error("cdf_integrals: expected strictly decreasing integrals");
  }
  if (!(a_[basis.size() - 1] > 0.0))
    throw std::runtime_error("cdf_integrals: expected positive integrals");
}

double w1_integral(const Basis& basis, const WeightVector& p, const WeightVector& q,
                   int grid_points) {
  if (p.size() != basis.size() || q.size() != basis.size())
    throw std::invalid_argument("w1_integral: size mismatch");
  const double lo = basis.support_lo();
  const double hi = basis.support_hi();
  const double dx = (hi - lo) / (grid_points - 1);
  Eigen::VectorXd delta = p.values() - q.values();
  Eigen::VectorXd f(grid_points);
  for (int g = 0; g < grid_points; ++g) {
    const double x = lo + g * dx;
    double acc = 0.0;
    for (int n = 0; n < basis.size(); ++n) acc += delta[n] * basis.component_cdf(n, x);
    f[g] = std::abs(acc);
  }
  return trapezoid(f, dx);
}

double w1_vectorized(const CdfIntegrals& integrals, const WeightVector& p,
                     const WeightVector& q) {
  const Eigen::VectorXd& a = integrals.values();
  if (p.size() != a.size() || q.size() != a.size())
    throw std::invalid_argument("w1_vectorized: size mismatch");
  const SignSplit split = sign_split(p, q);
  double pos = 0.0, neg = 0.0;
  for (int n = 0; n < p.size(); ++n) {
    const double d = a[n] * (p[n] - q[n]);
    if (split.b[n]) pos += std::abs(d);
    else neg += std::abs(d);
  }
  return std::abs(pos - neg);
}

double w1_vectorized(const Basis& basis, const WeightVector& p, const WeightVector& q,
                     int grid_points) {
  return w1_vectorized(CdfIntegrals(basis, grid_points), p, q);
}

double w1_empirical(std::vector<double> samples_p, std::vector<double> samples_q) {
  if (samples_p.empty() || samples_q.empty())
    throw std::invalid_argument("w1_empirical: empty sample set");
  std::sort(samples_p.begin(), samples_p.end());
  std::sort(samples_q.begin(), samples_q.end());
  const std::size_t k = std::max(samples_p.size(), samples_q.size());
  auto quantile = [](const std::vector<double>& s, double z) {
    const std::size_t idx =
        std::min(static_cast<std::size_t>(z * s.size()), s.size() - 1);
    return s[idx];
  };
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double z = (i + 0.5) / k;
    acc += std::abs(quantile(samples_p, z) - quantile(samples_q, z));
  }
  return acc / k;
}

}  // namespace gmix
