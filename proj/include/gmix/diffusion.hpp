// Desk-scale diffusion model conditioned on GMM latent codes: linear beta
// schedule, forward noising, x0-resampling reverse process, and an optional
// classifier head on the denoiser bottleneck.
#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gmix/net.hpp"
#include "gmix/rng.hpp"

namespace gmix {

struct DiffusionSchedule {
  int t_max;
  double beta_start;
  double beta_end;
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;      // 1 - beta
  Eigen::VectorXd alpha_bar;  // running product of alpha

  double abar(int t) const { return alpha_bar[t - 1]; }  // t in [1, t_max]
};

DiffusionSchedule build_schedule(int t_max, double beta_start = 0.001,
                                 double beta_end = 0.2);

Eigen::VectorXd forward_noise(const DiffusionSchedule& schedule,
                              const Eigen::VectorXd& x0, int t,
                              const Eigen::VectorXd& eps);

Eigen::VectorXd predict_x0(const DiffusionSchedule& schedule, const Eigen::VectorXd& x_t,
                           const Eigen::VectorXd& eps_hat, int t);

// Three-component GMM over each active feature block; uniform component
// weights, means spaced wider than the shared scale.
struct LatentSpec {
  int n_features;
  int code_len = 8;
  std::array<double, 3> component_means{-2.0, 0.0, 2.0};
  double component_scale = 0.5;
  std::array<double, 3> component_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  int latent_dim() const { return n_features * code_len; }
  void validate() const;
};

struct LatentCode {
  std::vector<Eigen::VectorXd> blocks;      // one per feature, zero when inactive
  std::vector<std::uint8_t> attributes;     // indicator A

  Eigen::VectorXd flat() const;
};

LatentCode sample_latent(const LatentSpec& spec,
                         const std::vector<std::uint8_t>& attributes, Rng& rng);

// [t/T, sin(2 pi t/T), cos(2 pi t/T)]
Eigen::Vector3d time_embedding(int t, int t_max);

using Denoiser =
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x_t, int t, const LatentCode&)>;

struct DiffusionModel {
  Mlp net;  // input: data_dim + 3 + latent_dim, output: data_dim
  DiffusionSchedule schedule;
  LatentSpec latent_spec;
  int data_dim;
  std::optional<Mlp> classifier_head;  // bottleneck -> n_features sigmoids

  // Post-activation index of the trunk bottleneck the head reads from.
  int bottleneck_index() const { return (net.layer_count() + 1) / 2; }
};

DiffusionModel make_diffusion_model(int data_dim, const LatentSpec& spec,
                                    const DiffusionSchedule& schedule,
                                    const std::vector<int>& hidden_sizes, Rng& rng,
                                    bool with_classifier_head = false);

Eigen::VectorXd denoise(const DiffusionModel& model, const Eigen::VectorXd& x_t, int t,
                        const LatentCode& code);

// Attribute probabilities from the classifier head for a noised input.
Eigen::VectorXd classify(const DiffusionModel& model, const Eigen::VectorXd& x_t, int t,
                         const LatentCode& code);

struct DiffusionDataset {
  std::vector<Eigen::VectorXd> points;
  std::vector<LatentCode> codes;  // fixed per sample, drawn once before training
  std::size_t size() const { return points.size(); }
};

struct DiffusionTrainConfig {
  double learning_rate = 0.1;
  int batch_size = 8;
  int steps = 24000;
  std::uint64_t seed = 0;
  double lambda_cls = 0.0;              // 0 leaves the head untouched
  std::string cls_loss_name = "bce";    // bce | ngmg_literal | ngmg_two_sided
  double cls_kernel_scale = 2.0;
  bool resample_codes = false;          // experimental; default keeps codes fixed
};

struct DiffusionTrainResult {
  std::vector<double> loss_curve;  // batch-mean L_simple per step
};

DiffusionTrainResult train_denoiser(DiffusionModel& model, const DiffusionDataset& data,
                                    const DiffusionTrainConfig& config);

// Reverse process with an injectable denoiser (tests plug in oracles).
Eigen::VectorXd sample_chain(const DiffusionSchedule& schedule, int data_dim,
                             const Denoiser& denoiser, const LatentCode& code, Rng& rng);

Eigen::VectorXd sample(const DiffusionModel& model, const LatentCode& code, Rng& rng);

}  // namespace gmix
