#include "gmix/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace gmix {

DiffusionSchedule build_schedule(int t_max, double beta_start, double beta_end) {
  if (t_max < 1) throw std::invalid_argument("build_schedule: t_max must be >= 1");
  if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
    throw std::invalid_argument("build_schedule: need 0 < beta_start <= beta_end < 1");
  DiffusionSchedule s;
  s.t_max = t_max;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  s.beta.resize(t_max);
  s.alpha.resize(t_max);
  s.alpha_bar.resize(t_max);
  double running = 1.0;
  for (int t = 0; t < t_max; ++t) {
    s.beta[t] = t_max == 1
                    ? beta_start
                    : beta_start + t * (beta_end - beta_start) / (t_max - 1);
    s.alpha[t] = 1.0 - s.beta[t];
    running *= s.alpha[t];
    s.alpha_bar[t] = running;
  }
  return s;
}

namespace {
void check_step(const DiffusionSchedule& s, int t) {
  if (t < 1 || t > s.t_max) throw std::invalid_argument("diffusion: step out of range");
}
}  // namespace

Eigen::VectorXd forward_noise(const DiffusionSchedule& schedule,
                              const Eigen::VectorXd& x0, int t,
                              const Eigen::VectorXd& eps) {
  check_step(schedule, t);
  if (eps.size() != x0.size()) throw std::invalid_argument("forward_noise: shape mismatch");
  const double ab = schedule.abar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Eigen::VectorXd predict_x0(const DiffusionSchedule& schedule, const Eigen::VectorXd& x_t,
                           const Eigen::VectorXd& eps_hat, int t) {
  check_step(schedule, t);
  if (eps_hat.size() != x_t.size()) throw std::invalid_argument("predict_x0: shape mismatch");
  const double ab = schedule.abar(t);
  return (x_t - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
}

void LatentSpec::validate() const {
  if (n_features < 1 || code_len < 1)
    throw std::invalid_argument("latent_spec: sizes must be positive");
  if (!(component_scale > 0.0))
    throw std::invalid_argument("latent_spec: scale must be positive");
  for (double w : component_weights)
    if (std::abs(w - 1.0 / 3.0) > 1e-12)
      throw std::invalid_argument("latent_spec: component weights must be uniform");
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (!(std::abs(component_means[i] - component_means[j]) > component_scale))
        throw std::invalid_argument("latent_spec: component means too close");
}

Eigen::VectorXd LatentCode::flat() const {
  int dim = 0;
  for (const auto& b : blocks) dim += static_cast<int>(b.size());
  Eigen::VectorXd out(dim);
  int at = 0;
  for (const auto& b : blocks) {
    out.segment(at, b.size()) = b;
    at += static_cast<int>(b.size());
  }
  return out;
}

LatentCode sample_latent(const LatentSpec& spec,
                         const std::vector<std::uint8_t>& attributes, Rng& rng) {
  spec.validate();
  if (static_cast<int>(attributes.size()) != spec.n_features)
    throw std::invalid_argument("sample_latent: attribute length mismatch");
  LatentCode code;
  code.attributes = attributes;
  code.blocks.reserve(spec.n_features);
  for (int k = 0; k < spec.n_features; ++k) {
    if (!attributes[k]) {
      code.blocks.push_back(Eigen::VectorXd::Zero(spec.code_len));
      continue;
    }
    Eigen::VectorXd block(spec.code_len);
    for (int i = 0; i < spec.code_len; ++i) {
      const int comp = static_cast<int>(rng.below(3));
      block[i] = rng.normal(spec.component_means[comp], spec.component_scale);
    }
    code.blocks.push_back(std::move(block));
  }
  return code;
}

Eigen::Vector3d time_embedding(int t, int t_max) {
  const double z = static_cast<double>(t) / t_max;
  constexpr double two_pi = 6.283185307179586476925286766559;
  return {z, std::sin(two_pi * z), std::cos(two_pi * z)};
}

namespace {
Eigen::VectorXd denoiser_input(const DiffusionModel& model, const Eigen::VectorXd& x_t,
                               int t, const LatentCode& code) {
  Eigen::VectorXd in(model.net.input_size());
  in.segment(0, model.data_dim) = x_t;
  in.segment(model.data_dim, 3) = time_embedding(t, model.schedule.t_max);
  in.segment(model.data_dim + 3, model.latent_spec.latent_dim()) = code.flat();
  return in;
}
}  // namespace

DiffusionModel make_diffusion_model(int data_dim, const LatentSpec& spec,
                                    const DiffusionSchedule& schedule,
                                    const std::vector<int>& hidden_sizes, Rng& rng,
                                    bool with_classifier_head) {
  spec.validate();
  if (data_dim < 1) throw std::invalid_argument("diffusion model: data_dim must be >= 1");
  std::vector<int> sizes;
  sizes.push_back(data_dim + 3 + spec.latent_dim());
  for (int h : hidden_sizes) sizes.push_back(h);
  sizes.push_back(data_dim);
  DiffusionModel model{make_mlp(sizes, HiddenActivation::relu, OutputActivation::identity,
                                rng),
                       schedule, spec, data_dim, std::nullopt};
  if (with_classifier_head) {
    const int bneck = model.net.layer_sizes[model.bottleneck_index()];
    model.classifier_head = make_zero_mlp({bneck, spec.n_features},
                                          HiddenActivation::relu,
                                          OutputActivation::sigmoid);
  }
  return model;
}

Eigen::VectorXd denoise(const DiffusionModel& model, const Eigen::VectorXd& x_t, int t,
                        const LatentCode& code) {
  return forward(model.net, denoiser_input(model, x_t, t, code));
}

Eigen::VectorXd classify(const DiffusionModel& model, const Eigen::VectorXd& x_t, int t,
                         const LatentCode& code) {
  if (!model.classifier_head)
    throw std::invalid_argument("classify: model has no classifier head");
  const ForwardTrace trace =
      forward_trace(model.net, denoiser_input(model, x_t, t, code));
  return forward(*model.classifier_head, trace.activations[model.bottleneck_index()]);
}

DiffusionTrainResult train_denoiser(DiffusionModel& model, const DiffusionDataset& data,
                                    const DiffusionTrainConfig& config) {
  if (data.size() == 0) throw std::invalid_argument("train_denoiser: empty dataset");
  if (data.codes.size() != data.points.size())
    throw std::invalid_argument("train_denoiser: point/code count mismatch");
  if (config.lambda_cls != 0.0 && !model.classifier_head)
    throw std::invalid_argument("train_denoiser: lambda_cls set but no head");

  Rng rng = Rng::stream(config.seed, 0x64696666ULL);
  const int dim = model.data_dim;

  Eigen::VectorXd grid(model.latent_spec.n_features);
  for (int i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i);
  const KernelMatrix cls_kernel(grid, config.cls_kernel_scale);

  DiffusionTrainResult result;
  result.loss_curve.reserve(config.steps);
  for (int step = 0; step < config.steps; ++step) {
    Gradients trunk_acc = zero_gradients(model.net);
    Gradients head_acc =
        model.classifier_head ? zero_gradients(*model.classifier_head) : Gradients{};
    double batch_loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      const std::size_t i = rng.below(data.size());
      const int t = 1 + static_cast<int>(rng.below(model.schedule.t_max));
      Eigen::VectorXd eps(dim);
      for (int d = 0; d < dim; ++d) eps[d] = rng.normal();
      const LatentCode code =
          config.resample_codes
              ? sample_latent(model.latent_spec, data.codes[i].attributes, rng)
              : data.codes[i];
      const Eigen::VectorXd x_t = forward_noise(model.schedule, data.points[i], t, eps);
      const ForwardTrace trace =
          forward_trace(model.net, denoiser_input(model, x_t, t, code));
      const Eigen::VectorXd residual = trace.output() - eps;
      batch_loss += residual.squaredNorm();
      const Eigen::VectorXd gout = 2.0 * residual;

      if (config.lambda_cls != 0.0) {
        const Eigen::VectorXd& bneck = trace.activations[model.bottleneck_index()];
        const ForwardTrace head_trace = forward_trace(*model.classifier_head, bneck);
        Eigen::VectorXd attr(model.latent_spec.n_features);
        for (int k = 0; k < attr.size(); ++k) attr[k] = code.attributes[k];
        LossValue cls_loss;
        if (config.cls_loss_name == "bce") {
          cls_loss = bce(attr, head_trace.output());
        } else if (config.cls_loss_name == "ngmg_literal") {
          cls_loss = ngmg_entropy(attr, head_trace.output(), cls_kernel,
                                  NgmgEntropyMode::literal);
        } else if (config.cls_loss_name == "ngmg_two_sided") {
          cls_loss = ngmg_entropy(attr, head_trace.output(), cls_kernel,
                                  NgmgEntropyMode::two_sided);
        } else {
          throw std::invalid_argument("train_denoiser: unknown cls loss " +
                                      config.cls_loss_name);
        }
        batch_loss += config.lambda_cls * cls_loss.value;
        Gradients head_g =
            backward(*model.classifier_head, head_trace, cls_loss.gradient);
        head_acc.add_scaled(head_g, config.lambda_cls);
        LayerInjection inject{model.bottleneck_index(),
                              config.lambda_cls * head_g.input};
        trunk_acc.add_scaled(backward(model.net, trace, gout, &inject), 1.0);
      } else {
        trunk_acc.add_scaled(backward(model.net, trace, gout), 1.0);
      }
    }
    batch_loss /= config.batch_size;
    if (!std::isfinite(batch_loss))
      throw std::runtime_error("train_denoiser: non-finite loss at step " +
                               std::to_string(step));
    trunk_acc.scale(1.0 / config.batch_size);
    apply_sgd(model.net, trunk_acc, config.learning_rate);
    if (config.lambda_cls != 0.0) {
      head_acc.scale(1.0 / config.batch_size);
      apply_sgd(*model.classifier_head, head_acc, config.learning_rate);
    }
    result.loss_curve.push_back(batch_loss);
  }
  return result;
}

Eigen::VectorXd sample_chain(const DiffusionSchedule& schedule, int data_dim,
                             const Denoiser& denoiser, const LatentCode& code,
                             Rng& rng) {
  Eigen::VectorXd x(data_dim);
  for (int d = 0; d < data_dim; ++d) x[d] = rng.normal();
  Eigen::VectorXd x0 = x;
  for (int t = schedule.t_max; t >= 1; --t) {
    const Eigen::VectorXd eps_hat = denoiser(x, t, code);
    if (!eps_hat.allFinite())
      throw std::runtime_error("sample: denoiser produced non-finite output");
    x0 = predict_x0(schedule, x, eps_hat, t);
    if (t > 1) {
      const double ab_prev = schedule.abar(t - 1);
      Eigen::VectorXd fresh(data_dim);
      for (int d = 0; d < data_dim; ++d) fresh[d] = rng.normal();
      x = std::sqrt(ab_prev) * x0 + std::sqrt(1.0 - ab_prev) * fresh;
    }
  }
  return x0;
}

Eigen::VectorXd sample(const DiffusionModel& model, const LatentCode& code, Rng& rng) {
  return sample_chain(
      model.schedule, model.data_dim,
      [&model](const Eigen::VectorXd& x_t, int t, const LatentCode& c) {
        return denoise(model, x_t, t, c);
      },
      code, rng);
}

}  // namespace gmix
