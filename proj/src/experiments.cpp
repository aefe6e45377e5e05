#include "gmix/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gmix {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string condition_label(const std::vector<std::uint8_t>& attributes) {
  std::string s;
  s.reserve(attributes.size());
  for (std::uint8_t a : attributes) s.push_back(a ? '1' : '0');
  return s;
}
}  // namespace

ClusterDataset make_cluster_dataset(std::size_t n, Rng& rng) {
  ClusterDataset data;
  data.points.reserve(n);
  data.cluster.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.below(kClusterCount));
    const double angle = kTwoPi * c / kClusterCount;
    Eigen::Vector2d p{kClusterRadius * std::cos(angle) + kClusterSigma * rng.normal(),
                      kClusterRadius * std::sin(angle) + kClusterSigma * rng.normal()};
    data.points.push_back(p);
    data.cluster.push_back(c);
  }
  return data;
}

std::vector<std::uint8_t> cluster_features(int cluster) {
  if (cluster < 0 || cluster >= kClusterCount)
    throw std::invalid_argument("cluster_features: cluster out of range");
  // Three index bits plus one extra overlapping subset.
  const bool extra = cluster == 1 || cluster == 2 || cluster == 4 || cluster == 7;
  return {static_cast<std::uint8_t>(cluster & 1),
          static_cast<std::uint8_t>((cluster >> 1) & 1),
          static_cast<std::uint8_t>((cluster >> 2) & 1),
          static_cast<std::uint8_t>(extra ? 1 : 0)};
}

std::vector<std::uint8_t> cluster_class_code(int cluster) {
  if (cluster < 0 || cluster >= kClusterCount)
    throw std::invalid_argument("cluster_class_code: cluster out of range");
  std::vector<std::uint8_t> code(kFeatureBits, 0);
  code[cluster / 2] = 1;  // adjacent clusters share a class
  return code;
}

double nn_distance(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& ref) {
  if (ref.empty()) throw std::invalid_argument("nn_distance: empty reference");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : ref) best = std::min(best, (p - r).norm());
  return best;
}

double tau_from_holdout(const std::vector<Eigen::Vector2d>& held,
                        const std::vector<Eigen::Vector2d>& reference,
                        double quantile) {
  if (held.empty()) throw std::invalid_argument("tau_from_holdout: empty holdout");
  std::vector<double> d;
  d.reserve(held.size());
  for (const auto& h : held) d.push_back(nn_distance(h, reference));
  std::sort(d.begin(), d.end());
  const std::size_t idx = std::min(
      static_cast<std::size_t>(quantile * d.size()), d.size() - 1);
  return d[idx];
}

DefectReport defect_rate(const std::vector<Eigen::Vector2d>& generated,
                         const std::vector<std::string>& conditions,
                         const std::vector<Eigen::Vector2d>& reference_support,
                         double tau) {
  if (generated.empty() || reference_support.empty())
    throw std::invalid_argument("defect_rate: empty inputs");
  if (!conditions.empty() && conditions.size() != generated.size())
    throw std::invalid_argument("defect_rate: condition label count mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("defect_rate: tau must be positive");

  DefectReport report;
  report.tau = tau;
  report.n_samples = generated.size();
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const bool defect = nn_distance(generated[i], reference_support) > tau;
    if (defect) ++report.n_defects;
    if (!conditions.empty()) {
      auto& entry = report.per_condition[conditions[i]];
      ++entry.first;
      if (defect) ++entry.second;
    }
  }
  report.defect_rate =
      static_cast<double>(report.n_defects) / static_cast<double>(report.n_samples);
  return report;
}

DefectReport run_diffusion_arm(ArmLabeling labeling, std::uint64_t seed,
                               const FeatureVsClassConfig& config,
                               const std::vector<Eigen::Vector2d>& reference,
                               double tau) {
  auto label_of = [labeling](int cluster) {
    return labeling == ArmLabeling::features ? cluster_features(cluster)
                                             : cluster_class_code(cluster);
  };

  LatentSpec spec;
  spec.n_features = kFeatureBits;
  spec.code_len = config.code_len;

  Rng data_rng = Rng::stream(seed, 0x66766331ULL);
  const ClusterDataset train = make_cluster_dataset(config.train_points, data_rng);
  DiffusionDataset dataset;
  dataset.points.reserve(train.size());
  dataset.codes.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    dataset.points.push_back(train.points[i]);
    dataset.codes.push_back(sample_latent(spec, label_of(train.cluster[i]), data_rng));
  }

  Rng init_rng = Rng::stream(seed, 0x66766332ULL);
  DiffusionModel model = make_diffusion_model(
      2, spec, build_schedule(config.t_max), config.hidden_sizes, init_rng);

  DiffusionTrainConfig train_config;
  train_config.learning_rate = config.learning_rate;
  train_config.batch_size = config.batch_size;
  train_config.steps = config.steps;
  train_config.seed = splitmix64(seed ^ 0x66766333ULL);
  train_denoiser(model, dataset, train_config);

  Rng gen_rng = Rng::stream(seed, 0x66766334ULL);
  std::vector<Eigen::Vector2d> samples;
  std::vector<std::string> conditions;
  samples.reserve(config.samples_per_arm);
  for (int i = 0; i < config.samples_per_arm; ++i) {
    const int c = static_cast<int>(gen_rng.below(kClusterCount));
    const auto attrs = label_of(c);
    const LatentCode code = sample_latent(spec, attrs, gen_rng);
    const Eigen::VectorXd x = sample(model, code, gen_rng);
    samples.emplace_back(x[0], x[1]);
    conditions.push_back(condition_label(attrs));
  }
  return defect_rate(samples, conditions, reference, tau);
}

FeatureVsClassResult run_feature_vs_class(const FeatureVsClassConfig& config) {
  Rng ref_rng = Rng::stream(config.master_seed, 0x66766335ULL);
  const ClusterDataset reference_set =
      make_cluster_dataset(config.reference_points, ref_rng);
  const ClusterDataset holdout = make_cluster_dataset(config.holdout_points, ref_rng);

  FeatureVsClassResult result;
  result.tau =
      tau_from_holdout(holdout.points, reference_set.points, config.tau_quantile);

  for (int s = 0; s < config.n_seeds; ++s) {
    const std::uint64_t seed = config.master_seed + 1 + s;
    ArmOutcome outcome;
    outcome.seed = seed;
    outcome.feature_arm = run_diffusion_arm(
        config.identical_control ? ArmLabeling::classes : ArmLabeling::features, seed,
        config, reference_set.points, result.tau);
    outcome.class_arm = run_diffusion_arm(ArmLabeling::classes, seed, config,
                                          reference_set.points, result.tau);
    result.mean_feature_rate += outcome.feature_arm.defect_rate;
    result.mean_class_rate += outcome.class_arm.defect_rate;
    result.per_seed.push_back(std::move(outcome));
  }
  result.mean_feature_rate /= config.n_seeds;
  result.mean_class_rate /= config.n_seeds;
  return result;
}

MultiLabelDataset make_staircase_dataset(std::size_t n, int n_attributes,
                                         std::uint64_t seed) {
  if (n == 0 || n_attributes < 1)
    throw std::invalid_argument("make_staircase_dataset: bad sizes");
  Rng rng = Rng::stream(seed, 0x73746169ULL);
  MultiLabelDataset data;
  data.inputs.reserve(n);
  data.targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform01();
    Eigen::VectorXd input(1);
    input[0] = x;
    Eigen::VectorXd target(n_attributes);
    for (int k = 0; k < n_attributes; ++k)
      target[k] = x > (k + 0.5) / n_attributes ? 1.0 : 0.0;
    data.inputs.push_back(std::move(input));
    data.targets.push_back(std::move(target));
  }
  return data;
}

namespace {
double test_mse(const Mlp& model, const MultiLabelDataset& test) {
  double acc = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Eigen::VectorXd p = forward(model, test.inputs[i]);
    acc += (p - test.targets[i]).squaredNorm() / p.size();
  }
  return acc / test.size();
}
}  // namespace

double run_trial(const std::string& loss_name, std::uint64_t trial_seed,
                 const NgmgVsBceConfig& config) {
  const MultiLabelDataset train = make_staircase_dataset(
      config.train_points, config.n_attributes, splitmix64(trial_seed ^ 0x7472ULL));
  const MultiLabelDataset test = make_staircase_dataset(
      config.test_points, config.n_attributes, splitmix64(trial_seed ^ 0x7465ULL));

  std::vector<int> sizes{1};
  for (int h : config.hidden_sizes) sizes.push_back(h);
  sizes.push_back(config.n_attributes);
  Rng init_rng = Rng::stream(trial_seed, 0x696e6974ULL);
  Mlp model = make_mlp(sizes, HiddenActivation::relu, OutputActivation::sigmoid,
                       init_rng);

  Eigen::VectorXd grid(config.n_attributes);
  for (int i = 0; i < grid.size(); ++i) grid[i] = static_cast<double>(i);
  const KernelMatrix kern(grid, config.kernel_scale);

  Rng order_rng = Rng::stream(trial_seed, 0x6f726472ULL);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  order_rng.shuffle(order);
  std::size_t cursor = 0;

  double probe_acc = 0.0;
  int probe_count = 0;
  for (int it = 1; it <= config.iterations; ++it) {
    Gradients acc = zero_gradients(model);
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      const ForwardTrace trace = forward_trace(model, train.inputs[i]);
      const LossValue lv =
          loss_name == "bce"
              ? bce(train.targets[i], trace.output())
              : ngmg_entropy(train.targets[i], trace.output(), kern,
                             NgmgEntropyMode::two_sided, config.lambda_floor);
      acc.add_scaled(backward(model, trace, lv.gradient), 1.0);
    }
    acc.scale(1.0 / config.batch_size);
    apply_sgd(model, acc, config.learning_rate);
    if (it >= config.probe_start &&
        (it - config.probe_start) % config.probe_stride == 0) {
      probe_acc += test_mse(model, test);
      ++probe_count;
    }
  }
  if (probe_count == 0) {
    probe_acc = test_mse(model, test);
    probe_count = 1;
  }
  return probe_acc / probe_count;
}

NgmgVsBceResult run_ngmg_vs_bce(const NgmgVsBceConfig& config) {
  NgmgVsBceResult result;
  for (int trial = 0; trial < config.trials; ++trial) {
    // Matched seeds: both arms share data, init, and batch order.
    const std::uint64_t seed = config.master_seed + 1 + trial;
    const double mse_bce = run_trial("bce", seed, config);
    const double mse_ngmg = run_trial("ngmg_two_sided", seed, config);
    result.bce.push_back({seed, "bce", mse_bce});
    result.ngmg.push_back({seed, "ngmg_two_sided", mse_ngmg});
    result.mean_bce += mse_bce;
    result.mean_ngmg += mse_ngmg;
    if (mse_ngmg < mse_bce) ++result.ngmg_wins;
  }
  result.mean_bce /= config.trials;
  result.mean_ngmg /= config.trials;
  result.sign_test_p = sign_test_p_value(result.ngmg_wins, config.trials);
  return result;
}

double sign_test_p_value(int wins, int trials) {
  if (wins < 0 || trials < 1 || wins > trials)
    throw std::invalid_argument("sign_test_p_value: bad arguments");
  // P(X >= wins), X ~ Binomial(trials, 1/2), exact.
  double p = 0.0;
  double log_half = std::log(0.5);
  for (int k = wins; k <= trials; ++k) {
    double log_c = std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) -
                   std::lgamma(trials - k + 1.0);
    p += std::exp(log_c + trials * log_half);
  }
  return std::min(p, 1.0);
}

}  // namespace gmix
