#include "gmix/basis.hpp"

#include <cmath>
#include <stdexcept>

namespace gmix {

namespace {
constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double normal_pdf(double x, double mean, double stddev) {
  const double z = (x - mean) / stddev;
  return kInvSqrt2Pi / stddev * std::exp(-0.5 * z * z);
}

double normal_cdf(double x, double mean, double stddev) {
  return 0.5 * std::erfc(-(x - mean) / (stddev * kSqrt2));
}

Basis::Basis(int n_components, Eigen::VectorXd means, double scale,
             double support_lo, double support_hi)
    : n_components_(n_components),
      means_(std::move(means)),
      scale_(scale),
      support_lo_(support_lo),
      support_hi_(support_hi) {
  if (n_components_ < 2) throw std::invalid_argument("basis: need at least 2 components");
  if (means_.size() != n_components_)
    throw std::invalid_argument("basis: means length mismatch");
  if (!(scale_ > 0.0) || !std::isfinite(scale_))
    throw std::invalid_argument("basis: scale must be positive");
  if (!means_.allFinite() || !std::isfinite(support_lo_) || !std::isfinite(support_hi_))
    throw std::invalid_argument("basis: non-finite values");
  const double step = (means_[n_components_ - 1] - means_[0]) / (n_components_ - 1);
  if (!(step > 0.0)) throw std::invalid_argument("basis: means must be increasing");
  for (int i = 0; i + 1 < n_components_; ++i) {
    const double d = means_[i + 1] - means_[i];
    if (!(d > 0.0) || std::abs(d - step) > 1e-12 * std::max(1.0, std::abs(step)))
      throw std::invalid_argument("basis: means must be evenly spaced");
  }
  if (!(support_lo_ < means_[0]) || !(support_hi_ > means_[n_components_ - 1]))
    throw std::invalid_argument("basis: support must contain all means");
}

double Basis::spacing() const {
  return (means_[n_components_ - 1] - means_[0]) / (n_components_ - 1);
}

double Basis::component_pdf(int n, double x) const {
  return normal_pdf(x, means_[n], scale_);
}

double Basis::component_cdf(int n, double x) const {
  return normal_cdf(x, means_[n], scale_);
}

WeightVector::WeightVector(Eigen::VectorXd weights) : values_(std::move(weights)) {
  if (values_.size() == 0) throw std::invalid_argument("weights: empty");
  double sum = 0.0;
  for (int i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0)
      throw std::invalid_argument("weights: entries must be finite and >= 0");
    sum += values_[i];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("weights: must sum to 1 within 1e-9");
}

WeightVector WeightVector::uniform(int n) {
  return WeightVector(Eigen::VectorXd::Constant(n, 1.0 / n));
}

WeightVector WeightVector::one_hot(int n, int index) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
  v[index] = 1.0;
  return WeightVector(std::move(v));
}

Basis build_basis(int n_components, double data_min, double data_max, double scale,
                  double support_pad) {
  if (n_components < 2) throw std::invalid_argument("build_basis: N must be >= 2");
  if (!std::isfinite(data_min) || !std::isfinite(data_max) || !(data_max > data_min))
    throw std::invalid_argument("build_basis: need finite data_max > data_min");
  if (!(scale > 0.0)) throw std::invalid_argument("build_basis: scale must be positive");
  if (!(support_pad > 0.0)) throw std::invalid_argument("build_basis: pad must be positive");
  Eigen::VectorXd means(n_components);
  const double step = (data_max - data_min) / (n_components - 1);
  for (int i = 0; i < n_components; ++i) means[i] = data_min + i * step;
  return Basis(n_components, std::move(means), scale, data_min - support_pad * scale,
               data_max + support_pad * scale);
}

FitResult fit_weights(const Basis& basis, const std::vector<double>& data) {
  if (data.empty()) throw std::invalid_argument("fit_weights: empty data");
  for (double x : data)
    if (!std::isfinite(x)) throw std::invalid_argument("fit_weights: non-finite datum");

  const int n = basis.size();
  Eigen::VectorXd likelihood = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (double x : data) acc += basis.component_pdf(i, x);
    likelihood[i] = acc;
  }
  const double total = likelihood.sum();
  if (total <= 0.0) {
    return {WeightVector::uniform(n), true};
  }
  likelihood /= total;
  // Guard the sum-to-1 invariant against rounding in the division.
  likelihood /= likelihood.sum();
  return {WeightVector(std::move(likelihood)), false};
}

double density_at(const Basis& basis, const WeightVector& weights, double x) {
  if (weights.size() != basis.size())
    throw std::invalid_argument("density_at: weight/basis size mismatch");
  double acc = 0.0;
  for (int i = 0; i < basis.size(); ++i) acc += weights[i] * basis.component_pdf(i, x);
  return acc;
}

std::vector<double> sample_mixture(const Basis& basis, const WeightVector& weights,
                                   std::size_t n, Rng& rng) {
  if (weights.size() != basis.size())
    throw std::invalid_argument("sample_mixture: weight/basis size mismatch");
  Eigen::VectorXd cum(weights.size());
  double acc = 0.0;
  for (int i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cum[i] = acc;
  }
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double u = rng.uniform01() * acc;
    int lo = 0, hi = weights.size() - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (cum[mid] < u) lo = mid + 1;
      else hi = mid;
    }
    out[s] = rng.normal(basis.means()[lo], basis.scale());
  }
  return out;
}

}  // namespace gmix
