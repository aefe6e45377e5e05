// Comparative studies: feature-vs-class latent conditioning (defect rates on
// the synthetic 2D benchmark) and NGMG-entropy-vs-BCE classifier training.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gmix/diffusion.hpp"
#include "gmix/net.hpp"
#include "gmix/rng.hpp"

namespace gmix {

// --- synthetic 2D cluster benchmark -----------------------------------------

inline constexpr int kClusterCount = 8;
inline constexpr int kFeatureBits = 4;
inline constexpr double kClusterRadius = 1.3;
inline constexpr double kClusterSigma = 0.12;

struct ClusterDataset {
  std::vector<Eigen::Vector2d> points;
  std::vector<int> cluster;  // 0..7
  std::size_t size() const { return points.size(); }
};

ClusterDataset make_cluster_dataset(std::size_t n, Rng& rng);

// Overlapping binary features jointly identifying each cluster.
std::vector<std::uint8_t> cluster_features(int cluster);
// Disjoint collapse: adjacent cluster pairs share a one-hot class code.
std::vector<std::uint8_t> cluster_class_code(int cluster);

// --- defect metric -----------------------------------------------------------

struct DefectReport {
  std::size_t n_samples = 0;
  std::size_t n_defects = 0;
  double defect_rate = 0.0;
  double tau = 0.0;
  // condition label -> (samples, defects)
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_condition;
};

double nn_distance(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& ref);

// Quantile of held-out nearest-neighbor distances; the tau rule.
double tau_from_holdout(const std::vector<Eigen::Vector2d>& held,
                        const std::vector<Eigen::Vector2d>& reference,
                        double quantile = 0.95);

DefectReport defect_rate(const std::vector<Eigen::Vector2d>& generated,
                         const std::vector<std::string>& conditions,
                         const std::vector<Eigen::Vector2d>& reference_support,
                         double tau);

// --- feature vs class --------------------------------------------------------

enum class ArmLabeling { features, classes };

struct FeatureVsClassConfig {
  int n_seeds = 5;
  std::uint64_t master_seed = 1;
  std::size_t train_points = 2048;
  int steps = 24000;
  double learning_rate = 0.1;
  int batch_size = 8;
  int code_len = 2;
  std::vector<int> hidden_sizes{64, 64};
  int t_max = 100;
  std::size_t reference_points = 4000;
  std::size_t holdout_points = 500;
  int samples_per_arm = 300;
  double tau_quantile = 0.95;
  // Control mode: run the same labeling in both arms (reports must match).
  bool identical_control = false;
};

struct ArmOutcome {
  std::uint64_t seed;
  DefectReport feature_arm;
  DefectReport class_arm;
};

struct FeatureVsClassResult {
  std::vector<ArmOutcome> per_seed;
  double mean_feature_rate = 0.0;
  double mean_class_rate = 0.0;
  double tau = 0.0;
};

// One trained arm; exposed so tests can run controls and ablations directly.
DefectReport run_diffusion_arm(ArmLabeling labeling, std::uint64_t seed,
                               const FeatureVsClassConfig& config,
                               const std::vector<Eigen::Vector2d>& reference,
                               double tau);

FeatureVsClassResult run_feature_vs_class(const FeatureVsClassConfig& config);

// --- ngmg vs bce -------------------------------------------------------------

struct NgmgVsBceConfig {
  int trials = 20;
  int iterations = 1500;
  double learning_rate = 50.0;
  int batch_size = 1;
  int n_attributes = 16;
  std::size_t train_points = 400;
  std::size_t test_points = 256;
  double kernel_scale = 2.0;
  double lambda_floor = 0.01;
  std::vector<int> hidden_sizes{64, 64};
  std::uint64_t master_seed = 1;
  // Trial metric: test MSE averaged over probes in the final training stretch.
  int probe_start = 1001;
  int probe_stride = 50;
};

struct TrialSummary {
  std::uint64_t seed;
  std::string loss_name;
  double test_mse;
};

struct NgmgVsBceResult {
  std::vector<TrialSummary> bce;
  std::vector<TrialSummary> ngmg;
  double mean_bce = 0.0;
  double mean_ngmg = 0.0;
  int ngmg_wins = 0;
  double sign_test_p = 1.0;  // one-sided, H1: ngmg below bce
};

// Scalar input, staircase attribute targets t_k = [x > (k + 0.5) / K].
MultiLabelDataset make_staircase_dataset(std::size_t n, int n_attributes,
                                         std::uint64_t seed);

// One trial arm: train with the named loss, return the probe-averaged test MSE.
double run_trial(const std::string& loss_name, std::uint64_t trial_seed,
                 const NgmgVsBceConfig& config);

NgmgVsBceResult run_ngmg_vs_bce(const NgmgVsBceConfig& config);

// Exact one-sided binomial tail P(X >= wins) under fair coin.
double sign_test_p_value(int wins, int trials);

}  // namespace gmix
