// Minimal feed-forward network with manual reverse-mode gradients and plain
// SGD; all randomness flows through explicitly seeded streams.
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "gmix/losses.hpp"
#include "gmix/rng.hpp"

namespace gmix {

enum class HiddenActivation { relu, tanh_ };
enum class OutputActivation { sigmoid, identity };

struct Mlp {
  std::vector<int> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: layer_sizes[l+1] x layer_sizes[l]
  std::vector<Eigen::VectorXd> biases;
  HiddenActivation hidden_activation = HiddenActivation::relu;
  OutputActivation output_activation = OutputActivation::sigmoid;

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int layer_count() const { return static_cast<int>(weights.size()); }
};

// Parameters drawn uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)], layer by
// layer, weights row-major then bias.
Mlp make_mlp(const std::vector<int>& layer_sizes, HiddenActivation hidden,
             OutputActivation output, Rng& rng);

// Zero-initialized parameters (used for classifier heads so untrained sigmoid
// outputs sit at 0.5).
Mlp make_zero_mlp(const std::vector<int>& layer_sizes, HiddenActivation hidden,
                  OutputActivation output);

struct ForwardTrace {
  // activations[0] is the input; activations[l+1] the post-activation output
  // of layer l. Size layer_count()+1.
  std::vector<Eigen::VectorXd> activations;
  const Eigen::VectorXd& output() const { return activations.back(); }
};

Eigen::VectorXd forward(const Mlp& m, const Eigen::VectorXd& x);
ForwardTrace forward_trace(const Mlp& m, const Eigen::VectorXd& x);

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd input;  // d loss / d input

  void add_scaled(const Gradients& other, double factor);
  void scale(double factor);
};

Gradients zero_gradients(const Mlp& m);

// Extra gradient added to a post-activation value during the backward sweep;
// lets an auxiliary head feed its gradient into the trunk at an inner layer.
struct LayerInjection {
  int activation_index;  // index into ForwardTrace::activations
  Eigen::VectorXd gradient;
};

Gradients backward(const Mlp& m, const ForwardTrace& trace,
                   const Eigen::VectorXd& output_gradient,
                   const LayerInjection* injection = nullptr);

void apply_sgd(Mlp& m, const Gradients& g, double learning_rate);

struct TrainConfig {
  double learning_rate = 0.1;
  int batch_size = 1;
  int iterations = 1500;
  std::uint64_t seed = 0;
  std::string loss_name = "bce";  // bce | ngmg_literal | ngmg_two_sided
  double kernel_scale = 2.0;      // unit-spaced output grid
  double lambda_floor = 0.01;
};

struct MultiLabelDataset {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> targets;
  std::size_t size() const { return inputs.size(); }
};

struct TrainResult {
  Mlp model;
  std::vector<double> loss_curve;  // batch-mean loss per iteration
};

TrainResult train(Mlp m, const MultiLabelDataset& dataset, const TrainConfig& config);

}  // namespace gmix
