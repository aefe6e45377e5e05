// Iterative mass transport between weight vectors: each deficit well fills in
// proportion to its own magnitude while the NGMG field drains the kernel
// neighborhood that feeds it, then the vector is renormalized.
#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "gmix/basis.hpp"
#include "gmix/ngmg.hpp"

namespace gmix {

struct TransportConfig {
  double step_size = 1.0;
  double tolerance = 1e-3;
  int max_iters = 2000;
  // Kernel scale; defaults to 2x component spacing when unset.
  std::optional<double> kernel_scale;
  bool record_trace = true;
  bool record_snapshots = false;
  int quadrature_points = kDefaultQuadraturePoints;
};

enum class TransportStatus { converged, max_iters_reached };

struct TraceRow {
  int iteration;
  double w1;
  double ngmg_norm;
  std::optional<Eigen::VectorXd> snapshot;
};

struct TransportTrace {
  std::vector<TraceRow> rows;
};

struct TransportResult {
  WeightVector weights;
  TransportTrace trace;
  TransportStatus status;
  int iterations;
  double final_loss;  // l1 norm of deficit(weights, target) at stop
};

WeightVector normalize(const Eigen::VectorXd& v);

TransportResult transport(const Basis& basis, const WeightVector& target,
                          const WeightVector& init, const TransportConfig& config);

}  // namespace gmix
