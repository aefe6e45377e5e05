#include <doctest.h>

#include <cmath>

#include "gmix/diffusion.hpp"
#include "gmix/experiments.hpp"

using namespace gmix;

namespace {

LatentSpec small_spec(int features = 2, int code_len = 2) {
  LatentSpec spec;
  spec.n_features = features;
  spec.code_len = code_len;
  return spec;
}

DiffusionDataset two_cluster_data(std::size_t n, const LatentSpec& spec, Rng& rng) {
  DiffusionDataset data;
  for (std::size_t i = 0; i < n; ++i) {
    const bool right = rng.below(2) != 0;
    Eigen::VectorXd p(2);
    p << (right ? 1.0 : -1.0) + 0.1 * rng.normal(), 0.1 * rng.normal();
    std::vector<std::uint8_t> attrs{static_cast<std::uint8_t>(right ? 1 : 0),
                                    static_cast<std::uint8_t>(right ? 0 : 1)};
    data.points.push_back(p);
    data.codes.push_back(sample_latent(spec, attrs, rng));
  }
  return data;
}

}  // namespace

TEST_CASE("schedule invariants across configurations") {
  for (const auto& [t_max, b0, b1] :
       std::vector<std::tuple<int, double, double>>{{100, 0.001, 0.2},
                                                    {1, 0.05, 0.05},
                                                    {10, 0.01, 0.3},
                                                    {500, 0.0001, 0.05}}) {
    const DiffusionSchedule s = build_schedule(t_max, b0, b1);
    REQUIRE(s.beta.size() == t_max);
    CHECK(s.alpha_bar[0] == s.alpha[0]);
    for (int t = 0; t < t_max; ++t) {
      CHECK(s.alpha[t] == 1.0 - s.beta[t]);
      CHECK(s.beta[t] > 0.0);
      CHECK(s.beta[t] < 1.0);
      CHECK(s.alpha_bar[t] > 0.0);
      CHECK(s.alpha_bar[t] < 1.0);
      if (t > 0) CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
    }
  }
  const DiffusionSchedule single = build_schedule(1, 0.125, 0.125);
  CHECK(single.alpha_bar[0] == doctest::Approx(0.875));
  CHECK_THROWS_AS(build_schedule(0, 0.1, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.0, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.3, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(build_schedule(10, 0.1, 1.0), std::invalid_argument);
}

TEST_CASE("forward_noise and predict_x0 are exact inverses") {
  const DiffusionSchedule s = build_schedule(100);
  Rng rng(3);
  Eigen::VectorXd x0(3);
  x0 << 0.5, -1.5, 2.0;
  for (int t = 1; t <= 100; ++t) {
    Eigen::VectorXd eps(3);
    for (int i = 0; i < 3; ++i) eps[i] = rng.normal();
    const Eigen::VectorXd x_t = forward_noise(s, x0, t, eps);
    const Eigen::VectorXd back = predict_x0(s, x_t, eps, t);
    CHECK((back - x0).cwiseAbs().maxCoeff() < 1e-12);
  }

  // eps = 0 scales by sqrt(abar); eps_hat = 0 divides by it.
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  const Eigen::VectorXd scaled = forward_noise(s, x0, 50, zero);
  CHECK(scaled == (std::sqrt(s.abar(50)) * x0).eval());
  CHECK(predict_x0(s, scaled, zero, 50) ==
        (scaled / std::sqrt(s.abar(50))).eval());

  CHECK_THROWS_AS(forward_noise(s, x0, 0, zero), std::invalid_argument);
  CHECK_THROWS_AS(forward_noise(s, x0, 101, zero), std::invalid_argument);
  CHECK_THROWS_AS(forward_noise(s, x0, 1, Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("latent spec validation") {
  LatentSpec spec = small_spec();
  CHECK_NOTHROW(spec.validate());
  spec.component_weights = {0.5, 0.25, 0.25};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec();
  spec.component_means = {0.0, 0.1, 2.0};  // closer than the scale
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("sample_latent zero blocks and determinism") {
  const LatentSpec spec = small_spec(3, 4);
  Rng r1(11), r2(11);
  const LatentCode a = sample_latent(spec, {1, 0, 1}, r1);
  const LatentCode b = sample_latent(spec, {1, 0, 1}, r2);
  CHECK(a.blocks[1].isZero());
  CHECK_FALSE(a.blocks[0].isZero());
  CHECK(a.flat() == b.flat());
  CHECK(a.flat().size() == 12);

  Rng r3(12);
  const LatentCode zero = sample_latent(spec, {0, 0, 0}, r3);
  CHECK(zero.flat().isZero());

  CHECK_THROWS_AS(sample_latent(spec, {1, 0}, r3), std::invalid_argument);
}

TEST_CASE("latent block statistics match the symmetric mixture") {
  LatentSpec spec = small_spec(1, 1);
  Rng rng(13);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += sample_latent(spec, {1}, rng).blocks[0][0];
  const double mean = acc / n;
  // Var of the uniform mixture over {-2,0,2} with sigma 0.5 per component.
  const double var = (8.0 / 3.0) + 0.25;
  const double se = std::sqrt(var / n);
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("oracle denoiser recovers a planted point at every step") {
  const DiffusionSchedule s = build_schedule(100);
  Eigen::VectorXd planted(2);
  planted << 0.7, -0.4;
  const Denoiser oracle = [&](const Eigen::VectorXd& x_t, int t, const LatentCode&) {
    // The exact noise that maps planted -> x_t at step t.
    return ((x_t - std::sqrt(s.abar(t)) * planted) / std::sqrt(1.0 - s.abar(t))).eval();
  };
  const LatentSpec spec = small_spec();
  Rng rng(17);
  const LatentCode code = sample_latent(spec, {1, 0}, rng);
  const Eigen::VectorXd out = sample_chain(s, 2, oracle, code, rng);
  CHECK((out - planted).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("T=1 sampling is a single predict_x0 step") {
  const DiffusionSchedule s = build_schedule(1, 0.2, 0.2);
  const Denoiser fixed = [](const Eigen::VectorXd& x_t, int, const LatentCode&) {
    return (0.5 * x_t).eval();
  };
  const LatentSpec spec = small_spec();
  Rng rng(19);
  const LatentCode code = sample_latent(spec, {0, 0}, rng);
  Rng replay(21);
  const Eigen::VectorXd out = sample_chain(s, 2, fixed, code, replay);
  Rng replay2(21);
  Eigen::VectorXd x1(2);
  x1 << replay2.normal(), replay2.normal();
  CHECK(out == predict_x0(s, x1, (0.5 * x1).eval(), 1));
}

TEST_CASE("sampler determinism and NaN guard") {
  const DiffusionSchedule s = build_schedule(20);
  const LatentSpec spec = small_spec();
  Rng rng(23);
  DiffusionModel model = make_diffusion_model(2, spec, s, {8}, rng);
  const LatentCode code = sample_latent(spec, {1, 1}, rng);
  Rng g1(5), g2(5);
  CHECK(sample(model, code, g1) == sample(model, code, g2));

  const Denoiser broken = [](const Eigen::VectorXd& x, int, const LatentCode&) {
    return (x * std::nan("")).eval();
  };
  Rng g3(6);
  CHECK_THROWS_AS(sample_chain(s, 2, broken, code, g3), std::runtime_error);
}

TEST_CASE("zero training steps leave the model unchanged") {
  const LatentSpec spec = small_spec();
  Rng rng(29);
  DiffusionModel model = make_diffusion_model(2, spec, build_schedule(10), {8}, rng);
  const Mlp before = model.net;
  DiffusionDataset data = two_cluster_data(8, spec, rng);
  DiffusionTrainConfig config;
  config.steps = 0;
  train_denoiser(model, data, config);
  for (int l = 0; l < before.layer_count(); ++l)
    CHECK(model.net.weights[l] == before.weights[l]);
}

TEST_CASE("L_simple under a zero denoiser matches the data dimension") {
  // With eps_hat = 0 the per-sample loss is |eps|^2, expectation = dim.
  const LatentSpec spec = small_spec();
  Rng rng(31);
  DiffusionModel model = make_diffusion_model(2, spec, build_schedule(10), {8}, rng);
  for (auto& w : model.net.weights) w.setZero();
  for (auto& b : model.net.biases) b.setZero();
  DiffusionDataset data = two_cluster_data(32, spec, rng);
  DiffusionTrainConfig config;
  config.steps = 2000;
  config.learning_rate = 0.0 + 1e-300;  // effectively frozen model
  config.batch_size = 1;
  config.seed = 7;
  const DiffusionTrainResult r = train_denoiser(model, data, config);
  double mean = 0.0;
  for (double v : r.loss_curve) mean += v;
  mean /= r.loss_curve.size();
  CHECK(mean == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("training reduces loss on two-cluster toy data") {
  const LatentSpec spec = small_spec();
  Rng rng(37);
  DiffusionModel model = make_diffusion_model(2, spec, build_schedule(50), {32, 32}, rng);
  DiffusionDataset data = two_cluster_data(256, spec, rng);
  DiffusionTrainConfig config;
  config.steps = 5000;
  config.learning_rate = 0.05;
  config.batch_size = 8;
  config.seed = 11;
  const DiffusionTrainResult r = train_denoiser(model, data, config);
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 200; ++i) early += r.loss_curve[i];
  for (int i = 4800; i < 5000; ++i) late += r.loss_curve[i];
  CHECK(late < early);

  // Denoising round trip is easier at half noise than at full noise.
  Rng probe(41);
  double err_mid = 0.0, err_full = 0.0;
  for (int i = 0; i < 64; ++i) {
    const std::size_t idx = probe.below(data.size());
    Eigen::VectorXd eps(2);
    eps << probe.normal(), probe.normal();
    for (const int t : {25, 50}) {
      const Eigen::VectorXd x_t = forward_noise(model.schedule, data.points[idx], t, eps);
      const Eigen::VectorXd eps_hat = denoise(model, x_t, t, data.codes[idx]);
      const Eigen::VectorXd x0 = predict_x0(model.schedule, x_t, eps_hat, t);
      (t == 25 ? err_mid : err_full) += (x0 - data.points[idx]).norm();
    }
  }
  CHECK(err_mid < err_full);

  // Trained samples mostly land near the true support.
  std::vector<Eigen::Vector2d> reference;
  for (const auto& p : data.points) reference.emplace_back(p[0], p[1]);
  Rng hold_rng(43);
  const DiffusionDataset held = two_cluster_data(200, spec, hold_rng);
  std::vector<Eigen::Vector2d> held_pts;
  for (const auto& p : held.points) held_pts.emplace_back(p[0], p[1]);
  const double tau = tau_from_holdout(held_pts, reference);
  Rng gen_rng(47);
  int good = 0;
  const int n_samples = 100;
  for (int i = 0; i < n_samples; ++i) {
    const bool right = gen_rng.below(2) != 0;
    std::vector<std::uint8_t> attrs{static_cast<std::uint8_t>(right ? 1 : 0),
                                    static_cast<std::uint8_t>(right ? 0 : 1)};
    const LatentCode code = sample_latent(spec, attrs, gen_rng);
    const Eigen::VectorXd x = sample(model, code, gen_rng);
    if (nn_distance({x[0], x[1]}, reference) <= tau) ++good;
  }
  CHECK(good >= 80);
}

TEST_CASE("classifier head starts at 0.5 and learns above chance") {
  const LatentSpec spec = small_spec();
  Rng rng(53);
  DiffusionModel model =
      make_diffusion_model(2, spec, build_schedule(50), {32, 32}, rng, true);
  REQUIRE(model.classifier_head.has_value());

  DiffusionDataset data = two_cluster_data(256, spec, rng);
  const Eigen::VectorXd probs0 = classify(model, data.points[0], 10, data.codes[0]);
  for (int i = 0; i < probs0.size(); ++i) CHECK(probs0[i] == 0.5);

  DiffusionTrainConfig config;
  config.steps = 4000;
  config.learning_rate = 0.05;
  config.batch_size = 8;
  config.seed = 13;
  config.lambda_cls = 0.25;
  train_denoiser(model, data, config);

  // Head accuracy on lightly noised training points (attributes are balanced
  // two-cluster indicators, so chance is 0.5).
  Rng probe(59);
  int correct = 0, total = 0;
  for (int i = 0; i < 128; ++i) {
    const std::size_t idx = probe.below(data.size());
    Eigen::VectorXd eps(2);
    eps << probe.normal(), probe.normal();
    const Eigen::VectorXd x_t = forward_noise(model.schedule, data.points[idx], 5, eps);
    const Eigen::VectorXd probs = classify(model, x_t, 5, data.codes[idx]);
    for (int k = 0; k < probs.size(); ++k) {
      correct += (probs[k] > 0.5) == (data.codes[idx].attributes[k] != 0);
      ++total;
    }
  }
  CHECK(static_cast<double>(correct) / total > 0.5);
}

TEST_CASE("lambda_cls = 0 reproduces the no-head trajectory bit for bit") {
  const LatentSpec spec = small_spec();
  Rng r1(61);
  DiffusionModel with_head =
      make_diffusion_model(2, spec, build_schedule(20), {16}, r1, true);
  Rng r2(61);
  DiffusionModel without_head =
      make_diffusion_model(2, spec, build_schedule(20), {16}, r2, false);

  Rng data_rng(67);
  DiffusionDataset data = two_cluster_data(64, spec, data_rng);
  DiffusionTrainConfig config;
  config.steps = 500;
  config.seed = 3;
  config.lambda_cls = 0.0;
  train_denoiser(with_head, data, config);
  train_denoiser(without_head, data, config);
  for (int l = 0; l < with_head.net.layer_count(); ++l)
    CHECK(with_head.net.weights[l] == without_head.net.weights[l]);
}
