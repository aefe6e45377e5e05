#include "gmix/net.hpp"

#include <cmath>
#include <stdexcept>

namespace gmix {

namespace {

void check_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("mlp: need >= 2 layers");
  for (int s : layer_sizes)
    if (s < 1) throw std::invalid_argument("mlp: layer sizes must be positive");
}

Eigen::VectorXd apply_hidden(HiddenActivation act, const Eigen::VectorXd& z) {
  if (act == HiddenActivation::relu) return z.cwiseMax(0.0);
  return z.array().tanh();
}

Eigen::VectorXd apply_output(OutputActivation act, const Eigen::VectorXd& z) {
  if (act == OutputActivation::identity) return z;
  Eigen::VectorXd out(z.size());
  for (int i = 0; i < z.size(); ++i) {
    // Stable sigmoid on both tails.
    if (z[i] >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-z[i]));
    } else {
      const double e = std::exp(z[i]);
      out[i] = e / (1.0 + e);
    }
  }
  return out;
}

}  // namespace

Mlp make_mlp(const std::vector<int>& layer_sizes, HiddenActivation hidden,
             OutputActivation output, Rng& rng) {
  check_sizes(layer_sizes);
  Mlp m;
  m.layer_sizes = layer_sizes;
  m.hidden_activation = hidden;
  m.output_activation = output;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double lim = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-lim, lim);
    Eigen::VectorXd b(fan_out);
    for (int r = 0; r < fan_out; ++r) b[r] = rng.uniform(-lim, lim);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  return m;
}

Mlp make_zero_mlp(const std::vector<int>& layer_sizes, HiddenActivation hidden,
                  OutputActivation output) {
  check_sizes(layer_sizes);
  Mlp m;
  m.layer_sizes = layer_sizes;
  m.hidden_activation = hidden;
  m.output_activation = output;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    m.weights.push_back(Eigen::MatrixXd::Zero(layer_sizes[l + 1], layer_sizes[l]));
    m.biases.push_back(Eigen::VectorXd::Zero(layer_sizes[l + 1]));
  }
  return m;
}

ForwardTrace forward_trace(const Mlp& m, const Eigen::VectorXd& x) {
  if (x.size() != m.input_size()) throw std::invalid_argument("forward: input size mismatch");
  ForwardTrace trace;
  trace.activations.reserve(m.layer_count() + 1);
  trace.activations.push_back(x);
  for (int l = 0; l < m.layer_count(); ++l) {
    Eigen::VectorXd z = m.weights[l] * trace.activations.back() + m.biases[l];
    trace.activations.push_back(l + 1 == m.layer_count()
                                    ? apply_output(m.output_activation, z)
                                    : apply_hidden(m.hidden_activation, z));
  }
  return trace;
}

Eigen::VectorXd forward(const Mlp& m, const Eigen::VectorXd& x) {
  return forward_trace(m, x).output();
}

void Gradients::add_scaled(const Gradients& other, double factor) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += factor * other.weights[l];
    biases[l] += factor * other.biases[l];
  }
  input += factor * other.input;
}

void Gradients::scale(double factor) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] *= factor;
    biases[l] *= factor;
  }
  input *= factor;
}

Gradients zero_gradients(const Mlp& m) {
  Gradients g;
  for (int l = 0; l < m.layer_count(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(m.weights[l].rows(), m.weights[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(m.biases[l].size()));
  }
  g.input = Eigen::VectorXd::Zero(m.input_size());
  return g;
}

Gradients backward(const Mlp& m, const ForwardTrace& trace,
                   const Eigen::VectorXd& output_gradient,
                   const LayerInjection* injection) {
  if (output_gradient.size() != m.output_size())
    throw std::invalid_argument("backward: output gradient size mismatch");
  Gradients g;
  g.weights.resize(m.layer_count());
  g.biases.resize(m.layer_count());

  Eigen::VectorXd d = output_gradient;  // d loss / d activation[l+1]
  for (int l = m.layer_count() - 1; l >= 0; --l) {
    const Eigen::VectorXd& a_out = trace.activations[l + 1];
    if (injection && injection->activation_index == l + 1) d += injection->gradient;
    Eigen::VectorXd dz;
    if (l + 1 == m.layer_count()) {
      if (m.output_activation == OutputActivation::sigmoid)
        dz = (d.array() * a_out.array() * (1.0 - a_out.array())).matrix();
      else
        dz = d;
    } else {
      if (m.hidden_activation == HiddenActivation::relu)
        dz = d.cwiseProduct((a_out.array() > 0.0).cast<double>().matrix());
      else
        dz = (d.array() * (1.0 - a_out.array().square())).matrix();
    }
    g.weights[l] = dz * trace.activations[l].transpose();
    g.biases[l] = dz;
    d = m.weights[l].transpose() * dz;
  }
  g.input = d;
  return g;
}

void apply_sgd(Mlp& m, const Gradients& g, double learning_rate) {
  for (int l = 0; l < m.layer_count(); ++l) {
    m.weights[l] -= learning_rate * g.weights[l];
    m.biases[l] -= learning_rate * g.biases[l];
  }
}

TrainResult train(Mlp m, const MultiLabelDataset& dataset, const TrainConfig& config) {
  if (dataset.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (dataset.targets.size() != dataset.inputs.size())
    throw std::invalid_argument("train: input/target count mismatch");
  if (config.batch_size < 1 || config.iterations < 0 || !(config.learning_rate > 0.0))
    throw std::invalid_argument("train: bad config");

  enum class Loss { bce, ngmg_literal, ngmg_two_sided };
  Loss loss;
  if (config.loss_name == "bce") loss = Loss::bce;
  else if (config.loss_name == "ngmg_literal") loss = Loss::ngmg_literal;
  else if (config.loss_name == "ngmg_two_sided") loss = Loss::ngmg_two_sided;
  else throw std::invalid_argument("train: unknown loss " + config.loss_name);

  const int k = m.output_size();
  Eigen::VectorXd grid(k);
  for (int i = 0; i < k; ++i) grid[i] = static_cast<double>(i);
  const KernelMatrix kern(grid, config.kernel_scale);

  Rng rng = Rng::stream(config.seed, 0x6e657431ULL);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t cursor = 0;

  TrainResult result{std::move(m), {}};
  result.loss_curve.reserve(config.iterations);
  for (int it = 0; it < config.iterations; ++it) {
    Gradients acc = zero_gradients(result.model);
    double batch_loss = 0.0;
    for (int b = 0; b < config.batch_size; ++b) {
      if (cursor >= order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      const ForwardTrace trace = forward_trace(result.model, dataset.inputs[i]);
      LossValue lv;
      switch (loss) {
        case Loss::bce:
          lv = bce(dataset.targets[i], trace.output());
          break;
        case Loss::ngmg_literal:
          lv = ngmg_entropy(dataset.targets[i], trace.output(), kern,
                            NgmgEntropyMode::literal, config.lambda_floor);
          break;
        case Loss::ngmg_two_sided:
          lv = ngmg_entropy(dataset.targets[i], trace.output(), kern,
                            NgmgEntropyMode::two_sided, config.lambda_floor);
          break;
      }
      batch_loss += lv.value;
      acc.add_scaled(backward(result.model, trace, lv.gradient), 1.0);
    }
    acc.scale(1.0 / config.batch_size);
    batch_loss /= config.batch_size;
    if (!std::isfinite(batch_loss))
      throw std::runtime_error("train: non-finite loss at iteration " +
                               std::to_string(it));
    apply_sgd(result.model, acc, config.learning_rate);
    result.loss_curve.push_back(batch_loss);
  }
  return result;
}

}  // namespace gmix
