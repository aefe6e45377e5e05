#include <doctest.h>

#include "gmix/transport.hpp"

using namespace gmix;

namespace {

WeightVector random_weights(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform01() + 1e-12;
  v /= v.sum();
  return WeightVector(v);
}

}  // namespace

TEST_CASE("normalize clamps and rescales") {
  Eigen::VectorXd v(2);
  v << 0.2, 0.2;
  CHECK(normalize(v).values()[0] == doctest::Approx(0.5));

  v << -0.1, 0.3;
  const WeightVector w = normalize(v);
  CHECK(w[0] == 0.0);
  CHECK(w[1] == 1.0);

  v << -0.5, -0.1;
  CHECK_THROWS_AS(normalize(v), std::invalid_argument);

  // Idempotence on valid weight vectors, bit for bit.
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const WeightVector w0 = random_weights(8, rng);
    CHECK(normalize(w0.values()).values() == w0.values());
  }
}

TEST_CASE("transport converges immediately when init equals target") {
  const Basis b = build_basis(6, 0.0, 5.0, 0.4);
  Rng rng(2);
  const WeightVector target = random_weights(6, rng);
  TransportConfig config;
  const TransportResult r = transport(b, target, target, config);
  CHECK(r.status == TransportStatus::converged);
  CHECK(r.iterations == 0);
  REQUIRE(r.trace.rows.size() == 1);
  CHECK(r.trace.rows[0].w1 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("uniform to one-hot converges within 500 iterations") {
  const Basis b = build_basis(10, 0.0, 9.0, 0.5);
  const WeightVector target = WeightVector::one_hot(10, 4);
  TransportConfig config;
  config.step_size = 1.0;
  config.tolerance = 1e-3;
  config.max_iters = 500;
  const TransportResult r = transport(b, target, WeightVector::uniform(10), config);
  CHECK(r.status == TransportStatus::converged);
  CHECK(r.iterations <= 500);
  CHECK(r.final_loss <= 1e-3);
  CHECK(r.trace.rows.back().w1 < r.trace.rows.front().w1);
}

TEST_CASE("transport trace properties on a random target") {
  const int n = 24;
  const Basis b = build_basis(n, 0.0, 23.0, 0.5);
  Rng rng(5);
  const WeightVector target = random_weights(n, rng);
  TransportConfig config;
  config.record_snapshots = true;
  const TransportResult r = transport(b, target, WeightVector::uniform(n), config);
  REQUIRE(r.status == TransportStatus::converged);

  // Iteration indices strictly increase; every snapshot is a weight vector.
  for (std::size_t i = 0; i < r.trace.rows.size(); ++i) {
    CHECK(r.trace.rows[i].iteration == static_cast<int>(i));
    REQUIRE(r.trace.rows[i].snapshot.has_value());
    CHECK_NOTHROW(WeightVector(*r.trace.rows[i].snapshot));
  }
  CHECK(r.trace.rows.back().w1 < r.trace.rows.front().w1);

  // Converged: stopping loss at tolerance, and the two smallness measures
  // agree up to the kernel 1-norm; W1 is bounded by twice the largest CDF
  // integral times the stopping loss.
  const KernelMatrix m = kernel(b, 2.0 * b.spacing());
  CHECK(r.final_loss <= config.tolerance);
  CHECK(r.trace.rows.back().ngmg_norm <= m.one_norm() * config.tolerance + 1e-15);
  const CdfIntegrals integrals(b);
  CHECK(r.trace.rows.back().w1 <= 2.0 * integrals.values()[0] * config.tolerance);
}

TEST_CASE("transport is deterministic") {
  const Basis b = build_basis(12, 0.0, 11.0, 0.5);
  Rng rng(7);
  const WeightVector target = random_weights(12, rng);
  TransportConfig config;
  const TransportResult r1 = transport(b, target, WeightVector::uniform(12), config);
  const TransportResult r2 = transport(b, target, WeightVector::uniform(12), config);
  CHECK(r1.weights.values() == r2.weights.values());
  CHECK(r1.iterations == r2.iterations);
}

TEST_CASE("ten iterations already shrink W1 on a two-peak target") {
  const int n = 40;
  const Basis b = build_basis(n, 0.0, 39.0, 1.0);
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) {
    t[i] = 0.6 * std::exp(-0.5 * (i - 10.0) * (i - 10.0) / 9.0) +
           0.4 * std::exp(-0.5 * (i - 28.0) * (i - 28.0) / 16.0);
  }
  const WeightVector target{t / t.sum()};
  TransportConfig config;
  config.max_iters = 10;
  const TransportResult r = transport(b, target, WeightVector::uniform(n), config);
  REQUIRE(r.trace.rows.size() >= 2);
  const double w1_start = r.trace.rows.front().w1;
  const double w1_ten = r.trace.rows.back().w1;
  CHECK(w1_ten < 0.5 * w1_start);
}

TEST_CASE("every intermediate iterate is a valid weight vector") {
  const int n = 15;
  const Basis b = build_basis(n, 0.0, 14.0, 0.5);
  Rng rng(9);
  const WeightVector target = random_weights(n, rng);
  TransportConfig config;
  config.record_snapshots = true;
  config.max_iters = 50;
  const TransportResult r = transport(b, target, WeightVector::uniform(n), config);
  for (const TraceRow& row : r.trace.rows) {
    CHECK(row.snapshot->minCoeff() >= 0.0);
    CHECK(std::abs(row.snapshot->sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("transport validates inputs") {
  const Basis b = build_basis(4, 0.0, 3.0, 0.4);
  const WeightVector t4 = WeightVector::uniform(4);
  TransportConfig config;
  config.tolerance = 0.0;
  CHECK_THROWS_AS(transport(b, t4, t4, config), std::invalid_argument);
  config = TransportConfig{};
  config.max_iters = 0;
  CHECK_THROWS_AS(transport(b, t4, t4, config), std::invalid_argument);
  config = TransportConfig{};
  CHECK_THROWS_AS(transport(b, WeightVector::uniform(5), t4, config),
                  std::invalid_argument);
}
