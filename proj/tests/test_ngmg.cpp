#include <doctest.h>

#include <cmath>

#include "gmix/ngmg.hpp"
#include "gmix/rng.hpp"

using namespace gmix;

namespace {

WeightVector random_weights(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.uniform01() + 1e-12;
  v /= v.sum();
  return WeightVector(v);
}

}  // namespace

TEST_CASE("deficit takes the negative part") {
  Eigen::VectorXd pv(2), qv(2);
  pv << 0.5, 0.5;
  qv << 0.2, 0.8;
  const DeficitVector l = deficit(WeightVector(pv), WeightVector(qv));
  CHECK(l.values()[0] == 0.0);
  CHECK(l.values()[1] == doctest::Approx(-0.3));

  const WeightVector p = WeightVector::one_hot(2, 0);
  const WeightVector q = WeightVector::one_hot(2, 1);
  const DeficitVector extreme = deficit(p, q);
  CHECK(extreme.values()[0] == 0.0);
  CHECK(extreme.values()[1] == -1.0);
  CHECK(extreme.values().sum() == doctest::Approx(-1.0));

  CHECK(deficit(p, p).values().isZero());
}

TEST_CASE("deficit sum stays in [-1, 0] for weight vectors") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(40));
    const DeficitVector l = deficit(random_weights(n, rng), random_weights(n, rng));
    CHECK(l.values().sum() <= 0.0);
    CHECK(l.values().sum() >= -1.0 - 1e-12);
    CHECK(l.values().maxCoeff() <= 0.0);
  }
}

TEST_CASE("kernel matches the normal pdf oracle") {
  const Basis b = build_basis(2, 0.0, 1.0, 0.3);
  const KernelMatrix m = kernel(b, 1.0);
  const double oracle = std::exp(-0.5) / std::sqrt(2.0 * M_PI);
  CHECK(m.matrix()(0, 1) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(m.matrix()(1, 0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(m.matrix()(0, 0) == 0.0);
  CHECK(m.matrix()(1, 1) == 0.0);
  CHECK(oracle == doctest::Approx(0.241971).epsilon(1e-6));
}

TEST_CASE("kernel trace is zero and uniform grids are shift invariant") {
  const Basis b = build_basis(7, -2.0, 4.0, 0.5);
  const KernelMatrix m = kernel(b, 1.7);
  CHECK(m.matrix().trace() == 0.0);
  CHECK(m.matrix()(0, 1) == doctest::Approx(m.matrix()(1, 2)).epsilon(1e-14));
  CHECK(m.matrix()(2, 5) == doctest::Approx(m.matrix()(3, 6)).epsilon(1e-14));
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) {
      if (i == j) continue;
      CHECK(m.matrix()(i, j) > 0.0);
      CHECK(m.matrix()(i, j) == doctest::Approx(m.matrix()(j, i)));
    }
  CHECK_THROWS_AS(kernel(b, 0.0), std::invalid_argument);
}

TEST_CASE("ngmg_gradient hand example") {
  const Basis b = build_basis(2, 0.0, 1.0, 0.3);
  const KernelMatrix m = kernel(b, 1.0);
  Eigen::VectorXd lv(2);
  lv << 0.0, -0.3;
  const Eigen::VectorXd g = ngmg_gradient(m, DeficitVector(lv));
  CHECK(g[0] == doctest::Approx(0.3 * 0.24197072451914337).epsilon(1e-12));
  CHECK(g[1] == 0.0);

  const Eigen::VectorXd zero =
      ngmg_gradient(m, DeficitVector(Eigen::VectorXd::Zero(2)));
  CHECK(zero.isZero());
}

TEST_CASE("ngmg_gradient sign, bound, zero-iff-equal, linearity") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(40));
    const Basis b = build_basis(n, 0.0, static_cast<double>(n - 1), 0.4);
    const KernelMatrix m = kernel(b, 2.0 * b.spacing());
    const WeightVector p = random_weights(n, rng);
    const WeightVector q = random_weights(n, rng);
    const DeficitVector l = deficit(p, q);
    const Eigen::VectorXd g = ngmg_gradient(m, l);

    const double bound = std::abs(l.values().sum()) * m.max_entry();
    for (int i = 0; i < n; ++i) {
      CHECK(g[i] >= 0.0);
      CHECK(g[i] <= bound + 1e-15);
    }
    CHECK(g.cwiseAbs().sum() > 0.0);  // p != q almost surely

    // Positive linearity.
    Eigen::VectorXd l2v = -Eigen::VectorXd::Ones(n) * rng.uniform01() / n;
    const DeficitVector l2(l2v);
    const double a = rng.uniform01() * 2.0, c = rng.uniform01() * 2.0;
    const Eigen::VectorXd combined =
        ngmg_gradient(m, DeficitVector(a * l.values() + c * l2v));
    const Eigen::VectorXd parts = a * g + c * ngmg_gradient(m, l2);
    CHECK((combined - parts).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ngmg gradient is zero only at equality") {
  const Basis b = build_basis(4, 0.0, 3.0, 0.4);
  const KernelMatrix m = kernel(b, 1.0);
  const WeightVector p = WeightVector::uniform(4);
  CHECK(ngmg_gradient(m, deficit(p, p)).isZero());
  const WeightVector q = WeightVector::one_hot(4, 1);
  CHECK(ngmg_gradient(m, deficit(p, q)).cwiseAbs().sum() > 0.0);
}

TEST_CASE("Lipschitz continuity of the gradient norm in the first argument") {
  Rng rng(13);
  const int n = 16;
  const Basis b = build_basis(n, 0.0, 15.0, 0.4);
  const KernelMatrix m = kernel(b, 2.0);
  const double lipschitz = m.one_norm();
  const WeightVector q = random_weights(n, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const WeightVector p1 = random_weights(n, rng);
    const WeightVector p2 = random_weights(n, rng);
    const double n1 = ngmg_gradient(m, deficit(p1, q)).cwiseAbs().sum();
    const double n2 = ngmg_gradient(m, deficit(p2, q)).cwiseAbs().sum();
    const double dist = (p1.values() - p2.values()).cwiseAbs().sum();
    CHECK(std::abs(n1 - n2) <= lipschitz * dist + 1e-12);
  }
}

TEST_CASE("prop2 identity against w1_vectorized") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(30));
    const Basis b =
        build_basis(n, 0.0, 1.0 + 4.0 * rng.uniform01(), 0.05 + 0.4 * rng.uniform01());
    const KernelMatrix m = kernel(b, 2.0 * b.spacing());
    const WeightVector p = random_weights(n, rng);
    const WeightVector q = random_weights(n, rng);
    const double direct = w1_vectorized(b, p, q);
    const double via_ngmg = prop2_w1(b, m, p, q);
    CHECK(std::abs(via_ngmg - direct) <= 1e-8 * (1.0 + direct));
  }
}

TEST_CASE("prop2 closed-form 2x2 case") {
  const Basis b = build_basis(2, 0.0, 1.0, 0.25);
  const KernelMatrix m = kernel(b, 1.0);
  const WeightVector p = WeightVector::one_hot(2, 0);
  const WeightVector q = WeightVector::one_hot(2, 1);
  // With M = [[0, k], [k, 0]], M^{-1} NGMG(L+-) recovers B delta exactly, so
  // the value is |a1 - a2| regardless of k.
  const CdfIntegrals integrals(b);
  const double expected =
      std::abs(integrals.values()[0] - integrals.values()[1]);
  CHECK(prop2_w1(b, m, p, q) == doctest::Approx(expected).epsilon(1e-10));
  CHECK(prop2_w1(b, m, p, p) == doctest::Approx(0.0));
  CHECK(prop2_w1(b, m, p, q) ==
        doctest::Approx(w1_vectorized(b, p, q)).epsilon(1e-8));
}

TEST_CASE("prop3 report flags convergent and stuck sequences") {
  const int n = 12;
  const Basis b = build_basis(n, 0.0, 11.0, 0.4);
  const KernelMatrix m = kernel(b, 2.0);
  Rng rng(27);
  const WeightVector target = random_weights(n, rng);

  SUBCASE("constant sequence at the target") {
    const std::vector<WeightVector> seq{target, target, target};
    const ConvergenceReport r = prop3_convergence_check(b, m, seq, target);
    for (double v : r.w1) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
    for (double v : r.ngmg_norm) CHECK(v == 0.0);
    CHECK(r.equivalent);
    CHECK(r.w1_converged);
    CHECK(r.ngmg_converged);
  }

  SUBCASE("mixture path shrinking toward the target") {
    std::vector<WeightVector> seq;
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (double k : {1.0, 1e2, 1e4, 1e6, 1e9, 1e12}) {
      Eigen::VectorXd v = (1.0 - 1.0 / k) * target.values() + (1.0 / k) * uniform;
      seq.emplace_back(v / v.sum());
    }
    const ConvergenceReport r = prop3_convergence_check(b, m, seq, target);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      CHECK(r.w1[i] <= r.w1[i - 1]);
      CHECK(r.ngmg_norm[i] <= r.ngmg_norm[i - 1]);
    }
    CHECK(r.w1_converged);
    CHECK(r.ngmg_converged);
    CHECK(r.equivalent);
  }

  SUBCASE("fixed-gap sequence converges in neither measure") {
    std::vector<WeightVector> seq;
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(n, 1.0 / n);
    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd v = 0.9 * target.values() + 0.1 * uniform;
      seq.emplace_back(v / v.sum());
    }
    const ConvergenceReport r = prop3_convergence_check(b, m, seq, target);
    CHECK_FALSE(r.w1_converged);
    CHECK_FALSE(r.ngmg_converged);
    CHECK(r.equivalent);
  }

  CHECK_THROWS_AS(prop3_convergence_check(b, m, {}, target), std::invalid_argument);
}
