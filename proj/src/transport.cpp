#include "gmix/transport.hpp"

#include <cmath>
#include <stdexcept>

namespace gmix {

WeightVector normalize(const Eigen::VectorXd& v) {
  // A vector that already satisfies the weight invariants passes through
  // bit-identically.
  if (v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) <= 1e-9) return WeightVector(v);
  Eigen::VectorXd clamped = v.cwiseMax(0.0);
  const double sum = clamped.sum();
  if (!(sum > 0.0))
    throw std::invalid_argument("normalize: no positive mass after clamping");
  clamped /= sum;
  clamped /= clamped.sum();
  return WeightVector(std::move(clamped));
}

TransportResult transport(const Basis& basis, const WeightVector& target,
                          const WeightVector& init, const TransportConfig& config) {
  if (target.size() != basis.size() || init.size() != basis.size())
    throw std::invalid_argument("transport: weight/basis size mismatch");
  if (!(config.tolerance > 0.0)) throw std::invalid_argument("transport: tolerance <= 0");
  if (config.max_iters < 1) throw std::invalid_argument("transport: max_iters < 1");
  if (!(config.step_size > 0.0)) throw std::invalid_argument("transport: step_size <= 0");

  const double sigma_k = config.kernel_scale.value_or(2.0 * basis.spacing());
  const KernelMatrix kern = kernel(basis, sigma_k);

  WeightVector current = init;
  TransportTrace trace;
  int iteration = 0;
  double loss = 0.0;
  for (;; ++iteration) {
    const DeficitVector l = deficit(current, target);
    loss = l.l1_norm();
    const Eigen::VectorXd field = ngmg_gradient(kern, l);
    if (config.record_trace) {
      TraceRow row;
      row.iteration = iteration;
      row.w1 = w1_integral(basis, current, target, config.quadrature_points);
      row.ngmg_norm = field.cwiseAbs().sum();
      if (config.record_snapshots) row.snapshot = current.values();
      trace.rows.push_back(std::move(row));
    }
    if (loss <= config.tolerance)
      return {current, std::move(trace), TransportStatus::converged, iteration, loss};
    if (iteration >= config.max_iters)
      return {current, std::move(trace), TransportStatus::max_iters_reached, iteration,
              loss};
    // Wells fill by their own deficit; the NGMG field says where that mass is
    // attracted from, so it is drained from the neighborhood. The field holds
    // pdf values, so it is weighted by the grid spacing to get drained mass;
    // otherwise fine grids drain far more than the wells fill and the
    // iteration diverges.
    const Eigen::VectorXd update =
        current.values() +
        config.step_size * (-l.values() - basis.spacing() * field);
    if (!update.allFinite())
      throw std::runtime_error("transport: non-finite update (bug)");
    current = normalize(update);
  }
}

}  // namespace gmix
