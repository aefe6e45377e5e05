// Command-line entry point: fit | w1 | ngmg | transport | train-mlp |
// train-diffusion | sample | exp. A JSON config file can preload any option;
// command-line flags win. With --run-dir set, the effective config and a
// machine-readable status file land next to the outputs.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "gmix/experiments.hpp"
#include "gmix/serialize.hpp"
#include "gmix/svg.hpp"
#include "gmix/transport.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitInvariant = 4;
constexpr int kExitNumeric = 5;

// Option values resolved from defaults, then config file, then flags.
class ConfigLayer {
 public:
  ConfigLayer(CLI::App* cmd, std::string config_path) : cmd_(cmd) {
    if (config_path.empty()) return;
    loaded_ = gmix::load_json(config_path);
    if (!loaded_->is_object())
      throw std::invalid_argument("config file must hold a JSON object");
    for (const auto& [key, value] : loaded_->items()) {
      if (cmd_->get_option_no_throw("--" + key) == nullptr)
        throw std::invalid_argument("config file: unknown key '" + key + "'");
    }
  }

  template <typename T>
  void resolve(const std::string& name, T& value) const {
    if (!loaded_) return;
    const CLI::Option* opt = cmd_->get_option_no_throw("--" + name);
    if (opt != nullptr && opt->count() > 0) return;  // flag wins
    if (loaded_->contains(name)) value = loaded_->at(name).get<T>();
  }

 private:
  CLI::App* cmd_;
  std::optional<json> loaded_;
};

struct RunArtifacts {
  std::string run_dir;
  json effective;
  std::vector<std::string> outputs;

  fs::path resolve(const std::string& path) const {
    if (run_dir.empty() || path.empty()) return path;
    const fs::path p(path);
    return p.is_absolute() ? p : fs::path(run_dir) / p;
  }

  void note_output(const fs::path& p) { outputs.push_back(p.string()); }

  void finalize(const std::string& command) const {
    if (run_dir.empty()) return;
    fs::create_directories(run_dir);
    gmix::save_json(fs::path(run_dir) / "config.json", effective);
    json status{{"command", command}, {"status", "ok"}, {"outputs", outputs}};
    gmix::save_json(fs::path(run_dir) / "status.json", status);
  }
};

std::string csv_row(const std::vector<double>& values) {
  std::string row;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) row += ",";
    row += gmix::format_double(values[i]);
  }
  return row;
}

std::vector<std::uint8_t> parse_attributes(const std::string& bits,
                                           const std::string& features, int k) {
  std::vector<std::uint8_t> attrs(k, 0);
  if (!bits.empty()) {
    if (static_cast<int>(bits.size()) != k)
      throw std::invalid_argument("attribute bitstring must have length " +
                                  std::to_string(k));
    for (int i = 0; i < k; ++i) attrs[i] = bits[i] == '1';
    return attrs;
  }
  if (!features.empty()) {
    std::stringstream ss(features);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      const int idx = std::stoi(tok);
      if (idx < 0 || idx >= k)
        throw std::invalid_argument("feature index out of range: " + tok);
      attrs[idx] = 1;
    }
  }
  return attrs;
}

gmix::MultiLabelDataset read_multilabel_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path.string());
  std::vector<bool> is_input;
  {
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) is_input.push_back(col.rfind('x', 0) == 0);
  }
  gmix::MultiLabelDataset data;
  int n_in = 0, n_out = 0;
  for (bool b : is_input) (b ? n_in : n_out)++;
  if (n_in == 0 || n_out == 0)
    throw std::runtime_error("csv needs x* input and A* target columns");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    Eigen::VectorXd input(n_in), target(n_out);
    int ci = 0, co = 0;
    for (std::size_t col = 0; col < is_input.size(); ++col) {
      if (!std::getline(row, cell, ','))
        throw std::runtime_error("short csv row: " + line);
      if (is_input[col]) input[ci++] = std::stod(cell);
      else target[co++] = std::stod(cell);
    }
    data.inputs.push_back(std::move(input));
    data.targets.push_back(std::move(target));
  }
  if (data.size() == 0) throw std::runtime_error("no rows in " + path.string());
  return data;
}

// ---------------------------------------------------------------------------

void cmd_fit(CLI::App& app) {
  auto* cmd = app.add_subcommand("fit", "Fit expansion weights to 1D data");
  struct FitOpts {
    std::string config, data, out, basis_out, basis_in, run_dir;
    int n = 64;
    double sigma = 0.0;  // 0: default to component spacing
    double pad = 4.0;
  };
  auto opts = std::make_shared<FitOpts>();
  cmd->add_option("--config", opts->config, "JSON config file");
  cmd->add_option("--data", opts->data, "one value per line")->required();
  cmd->add_option("--n", opts->n, "number of components");
  cmd->add_option("--sigma", opts->sigma, "component scale (default: spacing)");
  cmd->add_option("--pad", opts->pad, "support pad in units of sigma");
  cmd->add_option("--out", opts->out, "weight vector JSON")->required();
  cmd->add_option("--basis-out", opts->basis_out, "basis JSON");
  cmd->add_option("--basis", opts->basis_in, "fit on an existing basis file");
  cmd->add_option("--run-dir", opts->run_dir, "directory for config echo and status");

  cmd->callback([cmd, opts]() {
    ConfigLayer layer(cmd, opts->config);
    layer.resolve("n", opts->n);
    layer.resolve("sigma", opts->sigma);
    layer.resolve("pad", opts->pad);

    const auto data = gmix::read_value_file(opts->data);
    const auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    double sigma = opts->sigma;
    if (sigma <= 0.0) sigma = (*hi - *lo) / (opts->n - 1);
    const gmix::Basis basis =
        opts->basis_in.empty()
            ? gmix::build_basis(opts->n, *lo, *hi, sigma, opts->pad)
            : gmix::basis_from_json(gmix::load_json(opts->basis_in));
    const gmix::FitResult fit = gmix::fit_weights(basis, data);
    if (fit.degenerate)
      std::cerr << "warning: degenerate fit, all likelihoods underflowed; "
                   "returning uniform weights\n";

    RunArtifacts artifacts;
    artifacts.run_dir = opts->run_dir;
    artifacts.effective = {{"command", "fit"},   {"data", opts->data},
                           {"n", opts->n},       {"sigma", sigma},
                           {"pad", opts->pad},   {"out", opts->out},
                           {"basis_out", opts->basis_out},
                           {"basis", opts->basis_in}};
    const fs::path out = artifacts.resolve(opts->out);
    gmix::save_json(out, gmix::to_json(fit.weights));
    artifacts.note_output(out);
    if (!opts->basis_out.empty()) {
      const fs::path bout = artifacts.resolve(opts->basis_out);
      gmix::save_json(bout, gmix::to_json(basis));
      artifacts.note_output(bout);
    }
    artifacts.finalize("fit");
  });
}

void cmd_w1(CLI::App& app) {
  auto* cmd = app.add_subcommand("w1", "Wasserstein-1 between two weight files");
  struct W1Opts {
    std::string config, basis, p, q, out, run_dir;
    int samples = 100000;
    int grid = gmix::kDefaultQuadraturePoints;
    std::uint64_t seed = 1;
  };
  auto opts = std::make_shared<W1Opts>();
  cmd->add_option("--config", opts->config, "JSON config file");
  cmd->add_option("--basis", opts->basis)->required();
  cmd->add_option("--p", opts->p)->required();
  cmd->add_option("--q", opts->q)->required();
  cmd->add_option("--samples", opts->samples, "empirical estimator sample count");
  cmd->add_option("--grid", opts->grid, "quadrature points");
  cmd->add_option("--seed", opts->seed);
  cmd->add_option("--out", opts->out, "also write the CSV here");
  cmd->add_option("--run-dir", opts->run_dir);

  cmd->callback([cmd, opts]() {
    ConfigLayer layer(cmd, opts->config);
    layer.resolve("samples", opts->samples);
    layer.resolve("grid", opts->grid);
    layer.resolve("seed", opts->seed);

    const gmix::Basis basis = gmix::basis_from_json(gmix::load_json(opts->basis));
    const gmix::WeightVector p = gmix::weights_from_json(gmix::load_json(opts->p));
    const gmix::WeightVector q = gmix::weights_from_json(gmix::load_json(opts->q));

    const double integral = gmix::w1_integral(basis, p, q, opts->grid);
    const double vectorized = gmix::w1_vectorized(basis, p, q, opts->grid);
    gmix::Rng rng = gmix::Rng::stream(opts->seed, 0x7731ULL);
    const auto sp = gmix::sample_mixture(basis, p, opts->samples, rng);
    const auto sq = gmix::sample_mixture(basis, q, opts->samples, rng);
    const double empirical = gmix::w1_empirical(sp, sq);

    const std::string csv = "w1_integral,w1_vectorized,w1_empirical\n" +
                            csv_row({integral, vectorized, empirical}) + "\n";
    std::cout << csv;

    RunArtifacts artifacts;
    artifacts.run_dir = opts->run_dir;
    artifacts.effective = {{"command", "w1"},           {"basis", opts->basis},
                           {"p", opts->p},              {"q", opts->q},
                           {"samples", opts->samples},  {"grid", opts->grid},
                           {"seed", opts->seed},        {"out", opts->out}};
    if (!opts->out.empty()) {
      const fs::path out = artifacts.resolve(opts->out);
      gmix::write_text(out, csv);
      artifacts.note_output(out);
    }
    artifacts.finalize("w1");
  });
}

void cmd_ngmg(CLI::App& app) {
  auto* cmd = app.add_subcommand("ngmg", "NGMG gradient between two weight files");
  struct NgmgOpts {
    std::string config, basis, p, q, out, run_dir;
    double sigma_kernel = 0.0;  // 0: default 2x spacing
    bool check_prop2 = false;
  };
  auto opts = std::make_shared<NgmgOpts>();
  cmd->add_option("--config", opts->config, "JSON config file");
  cmd->add_option("--basis", opts->basis)->required();
  cmd->add_option("--p", opts->p)->required();
  cmd->add_option("--q", opts->q)->required();
  cmd->add_option("--sigma-kernel", opts->sigma_kernel,
                  "kernel scale (default: 2x spacing)");
  cmd->add_flag("--check-prop2", opts->check_prop2, "emit the W1 identity residual");
  cmd->add_option("--out", opts->out, "gradient CSV path");
  cmd->add_option("--run-dir", opts->run_dir);

  cmd->callback([cmd, opts]() {
    ConfigLayer layer(cmd, opts->config);
    layer.resolve("sigma-kernel", opts->sigma_kernel);

    const gmix::Basis basis = gmix::basis_from_json(gmix::load_json(opts->basis));
    const gmix::WeightVector p = gmix::weights_from_json(gmix::load_json(opts->p));
    const gmix::WeightVector q = gmix::weights_from_json(gmix::load_json(opts->q));
    const double sigma =
        opts->sigma_kernel > 0.0 ? opts->sigma_kernel : 2.0 * basis.spacing();
    const gmix::KernelMatrix kern = gmix::kernel(basis, sigma);
    const Eigen::VectorXd g = gmix::ngmg_gradient(kern, gmix::deficit(p, q));

    std::string csv = "index,ngmg\n";
    for (int i = 0; i < g.size(); ++i)
      csv += std::to_string(i) + "," + gmix::format_double(g[i]) + "\n";
    std::cout << csv;

    RunArtifacts artifacts;
    artifacts.run_dir = opts->run_dir;
    artifacts.effective = {{"command", "ngmg"},
                           {"basis", opts->basis},
                           {"p", opts->p},
                           {"q", opts->q},
                           {"sigma-kernel", sigma},
                           {"check-prop2", opts->check_prop2},
                           {"out", opts->out}};
    if (opts->check_prop2) {
      const double direct = gmix::w1_vectorized(basis, p, q);
      const double via = gmix::prop2_w1(basis, kern, p, q);
      std::cout << "prop2_w1,w1_vectorized,residual\n"
                << csv_row({via, direct, std::abs(via - direct)}) << "\n";
    }
    if (!opts->out.empty()) {
      const fs::path out = artifacts.resolve(opts->out);
      gmix::write_text(out, csv);
      artifacts.note_output(out);
    }
    artifacts.finalize("ngmg");
  });
}

void cmd_transport(CLI::App& app) {
  auto* cmd = app.add_subcommand("transport", "Iterative NGMG transport to a target");
  struct TransportOpts {
    std::string config, basis, target, init, trace, out, plot, run_dir;
    double eta = 1.0, eps = 1e-3, sigma_kernel = 0.0;
    int max_iters = 2000;
  };
  auto opts = std::make_shared<TransportOpts>();
  cmd->add_option("--config", opts->config, "JSON config file");
  cmd->add_option("--basis", opts->basis)->required();
  cmd->add_option("--target", opts->target)->required();
  cmd->add_option("--init", opts->init, "initial weights (default: uniform)");
  cmd->add_option("--eta", opts->eta, "step size");
  cmd->add_option("--eps", opts->eps, "stopping tolerance on the deficit norm");
  cmd->add_option("--max-iters", opts->max_iters);
  cmd->add_option("--sigma-kernel", opts->sigma_kernel);
  cmd->add_option("--trace", opts->trace, "per-iteration CSV: iter,w1,ngmg_norm");
  cmd->add_option("--out", opts->out, "final weights JSON");
  cmd->add_option("--plot", opts->plot, "trace SVG");
  cmd->add_option("--run-dir", opts->run_dir);

  cmd->callback([cmd, opts]() {
    ConfigLayer layer(cmd, opts->config);
    layer.resolve("eta", opts->eta);
    layer.resolve("eps", opts->eps);
    layer.resolve("max-iters", opts->max_iters);
    layer.resolve("sigma-kernel", opts->sigma_kernel);

    const gmix::Basis basis = gmix::basis_from_json(gmix::load_json(opts->basis));
    const gmix::WeightVector target =
        gmix::weights_from_json(gmix::load_json(opts->target));
    const gmix::WeightVector init =
        opts->init.empty() ? gmix::WeightVector::uniform(basis.size())
                           : gmix::weights_from_json(gmix::load_json(opts->init));

    gmix::TransportConfig config;
    config.step_size = opts->eta;
    config.tolerance = opts->eps;
    config.max_iters = opts->max_iters;
    if (opts->sigma_kernel > 0.0) config.kernel_scale = opts->sigma_kernel;
    const gmix::TransportResult result = gmix::transport(basis, target, init, config);

    std::cout << (result.status == gmix::TransportStatus::converged
                      ? "converged"
                      : "max_iters_reached")
              << " after " << result.iterations
              << " iterations, loss=" << gmix::format_double(result.final_loss) << "\n";

    RunArtifacts artifacts;
    artifacts.run_dir = opts->run_dir;
    artifacts.effective = {{"command", "transport"},
                           {"basis", opts->basis},
                           {"target", opts->target},
                           {"init", opts->init},
                           {"eta", opts->eta},
                           {"eps", opts->eps},
                           {"max-iters", opts->max_iters},
                           {"sigma-kernel", opts->sigma_kernel},
                           {"trace", opts->trace},
                           {"out", opts->out}};
    if (!opts->trace.empty()) {
      std::string csv = "iter,w1,ngmg_norm\n";
      for (const auto& row : result.trace.rows)
        csv += std::to_string(row.iteration) + "," + gmix::format_double(row.w1) + "," +
               gmix::format_double(row.ngmg_norm) + "\n";
      const fs::path out = artifacts.resolve(opts->trace);
      gmix::write_text(out, csv);
      artifacts.note_output(out);
    }
    if (!opts->out.empty()) {
      const fs::path out = artifacts.resolve(opts->out);
      gmix::save_json(out, gmix::to_json(result.weights));
      artifacts.note_output(out);
    }
    if (!opts->plot.empty()) {
      gmix::PlotSeries w1_series{"w1", {}, {}}, norm_series{"ngmg_norm", {}, {}};
      for (const auto& row : result.trace.rows) {
        w1_series.x.push_back(row.iteration);
        w1_series.y.push_back(row.w1);
        norm_series.x.push_back(row.iteration);
        norm_series.y.push_back(row.ngmg_norm);
      }
      const fs::path out = artifacts.resolve(opts->plot);
      gmix::emit_plot({w1_series, norm_series}, "transport trace", out);
      artifacts.note_output(out);
    }
    artifacts.finalize("transport");
  });
}

void cmd_train_mlp(CLI::App& app) {
  auto* cmd = app.add_subcommand("train-mlp", "Train a multi-label classifier");
  struct TrainMlpOpts {
    std::string config, data, out, curve, loss = "bce", layers = "", run_dir;
    double lr = 0.5, kernel_scale = 2.0, lambda_floor = 0.01;
    int iters = 1500, batch = 1;
    std::uint64_t seed = 1;
  };
  auto opts = std::make_shared<TrainMlpOpts>();
  cmd->add_option("--config", opts->config, "JSON config file");
  cmd->add_option("--data", opts->data, "CSV with x* inputs and A* targets")->required();
  cmd->add_option("--loss", opts->loss, "bce | ngmg_literal | ngmg_two_sided");
  cmd->add_option("--iters", opts->iters);
  cmd->add_option("--lr", opts->lr);
  cmd->add_option("--batch", opts->batch);
  cmd->add_option("--seed", opts->seed);
  cmd->add_option("--layers", opts->layers,
                  "hidden sizes, comma separated (default 64,64)");
  cmd->add_option("--kernel-scale", opts->kernel_scale);
  cmd->add_option("--lambda-floor", opts->lambda_floor);
  cmd->add_option("--out", opts->out, "model checkpoint JSON")->required();
  cmd->add_option("--curve", opts->curve, "loss curve CSV");
  cmd->add_option("--run-dir", opts->run_dir);

  cmd->callback([cmd, opts]() {
    ConfigLayer layer(cmd, opts->config);
    layer.resolve("loss", opts->loss);
    layer.resolve("iters", opts->iters);
    layer.resolve("lr", opts->lr);
    layer.resolve("batch", opts->batch);
    layer.resolve("seed", opts->seed);
    layer.resolve("layers", opts->layers);
    layer.resolve("kernel-scale", opts->kernel_scale);
    layer.resolve("lambda-floor", opts->lambda_floor);

    const gmix::MultiLabelDataset data = read_multilabel_csv(opts->data);
    std::vector<int> sizes{static_cast<int>(data.inputs.front().size())};
    if (opts->layers.empty()) {
      sizes.push_back(64);
      sizes.push_back(64);
    } else {
      std::stringstream ss(opts->layers);
      std::string tok;
      while (std::getline(ss, tok, ',')) sizes.push_back(std::stoi(tok));
    }
    sizes.push_back(static_cast<int>(data.targets.front().size()));

    gmix::Rng init_rng = gmix::Rng::stream(opts->seed, 0x696e6974ULL);
    gmix::Mlp model = gmix::make_mlp(sizes, gmix::HiddenActivation::relu,
                                     gmix::OutputActivation::sigmoid, init_rng);
    gmix::TrainConfig config;
    config.learning_rate = opts->lr;
    config.batch_size = opts->batch;
    config.iterations = opts->iters;
    config.seed = opts->seed;
    config.loss_name = opts->loss;
    config.kernel_scale = opts->kernel_scale;
    config.lambda_floor = opts->lambda_floor;
    const gmix::TrainResult result = gmix::train(std::move(model), data, config);

    RunArtifacts artifacts;
    artifacts.run_dir = opts->run_dir;
    artifacts.effective = {{"command", "train-mlp"},
                           {"data", opts->data},
                           {"loss", opts->loss},
                           {"iters", opts->iters},
                           {"lr", opts->lr},
                           {"batch", opts->batch},
                           {"seed", opts->seed},
                           {"layers", opts->layers},
                           {"kernel-scale", opts->kernel_scale},
                           {"lambda-floor", opts->lambda_floor},
                           {"out", opts->out}};
    const fs::path out = artifacts.resolve(opts->out);
    gmix::save_json(out, gmix::to_json(result.model));
    artifacts.note_output(out);
    if (!opts->curve.empty()) {
      std::string csv = "iter,loss\n";
      for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
        csv += std::to_string(i) + "," + gmix::format_double(result.loss_curve[i]) + "\n";
      const fs::path cout_path = artifacts.resolve(opts->curve);
      gmix::write_text(cout_path, csv);
      artifacts.note_output(cout_path);
    }
    artifacts.finalize("train-mlp");
  });
}

void cmd_train_diffusion(CLI::App& app) {
  auto* cmd = app.add_subcommand("train-diffusion",
                                 "Train the latent-conditioned denoiser");
  struct TrainDiffusionOpts {
    std::string config, data, out, curve, hidden = "64,64", cls_loss = "bce", run_dir;
    int steps = 24000, batch = 8, t_max = 100, code_len = 8;
    double lr = 0.1, beta_start = 0.001, beta_end = 0.2, lambda_cls = 0.0;
    std::uint64_t seed = 1;
    bool with_head = false, resample_codes = false;
  };
  auto opts = std::make_shared<TrainDiffusionOpts>();
  cmd->add_option("--config", opts->config, "JSON config file");
  cmd->add_option("--data", opts->data, "CSV rows x,y,A1..AK")->required();
  cmd->add_option("--steps", opts->steps);
  cmd->add_option("--batch", opts->batch);
  cmd->add_option("--lr", opts->lr);
  cmd->add_option("--seed", opts->seed);
  cmd->add_option("--t-max", opts->t_max);
  cmd->add_option("--beta-start", opts->beta_start);
  cmd->add_option("--beta-end", opts->beta_end);
  cmd->add_option("--code-len", opts->code_len);
  cmd->add_option("--hidden", opts->hidden, "hidden sizes, comma separated");
  cmd->add_flag("--with-head", opts->with_head, "attach a classifier head");
  cmd->add_option("--lambda-cls", opts->lambda_cls, "classifier loss weight");
  cmd->add_option("--cls-loss", opts->cls_loss);
  cmd->add_flag("--resample-codes", opts->resample_codes,
                "experimental: redraw codes every visit");
  cmd->add_option("--out", opts->out, "model checkpoint JSON")->required();
  cmd->add_option("--curve", opts->curve, "loss curve CSV");
  cmd->add_option("--run-dir", opts->run_dir);

  cmd->callback([cmd, opts]() {
    ConfigLayer layer(cmd, opts->config);
    layer.resolve("steps", opts->steps);
    layer.resolve("batch", opts->batch);
    layer.resolve("lr", opts->lr);
    layer.resolve("seed", opts->seed);
    layer.resolve("t-max", opts->t_max);
    layer.resolve("beta-start", opts->beta_start);
    layer.resolve("beta-end", opts->beta_end);
    layer.resolve("code-len", opts->code_len);
    layer.resolve("hidden", opts->hidden);
    layer.resolve("lambda-cls", opts->lambda_cls);
    layer.resolve("cls-loss", opts->cls_loss);

    const gmix::PointAttributeData raw = gmix::read_point_csv(opts->data);
    if (raw.attributes.front().empty())
      throw std::invalid_argument("train-diffusion: data has no attribute columns");

    gmix::LatentSpec spec;
    spec.n_features = static_cast<int>(raw.attributes.front().size());
    spec.code_len = opts->code_len;

    gmix::Rng code_rng = gmix::Rng::stream(opts->seed, 0x636f6465ULL);
    gmix::DiffusionDataset dataset;
    for (std::size_t i = 0; i < raw.points.size(); ++i) {
      Eigen::VectorXd p(2);
      p << raw.points[i][0], raw.points[i][1];
      dataset.points.push_back(p);
      dataset.codes.push_back(gmix::sample_latent(spec, raw.attributes[i], code_rng));
    }

    std::vector<int> hidden;
    {
      std::stringstream ss(opts->hidden);
      std::string tok;
      while (std::getline(ss, tok, ',')) hidden.push_back(std::stoi(tok));
    }
    gmix::Rng init_rng = gmix::Rng::stream(opts->seed, 0x696e6974ULL);
    gmix::DiffusionModel model = gmix::make_diffusion_model(
        2, spec, gmix::build_schedule(opts->t_max, opts->beta_start, opts->beta_end),
        hidden, init_rng, opts->with_head);

    gmix::DiffusionTrainConfig config;
    config.learning_rate = opts->lr;
    config.batch_size = opts->batch;
    config.steps = opts->steps;
    config.seed = opts->seed;
    config.lambda_cls = opts->lambda_cls;
    config.cls_loss_name = opts->cls_loss;
    config.resample_codes = opts->resample_codes;
    const gmix::DiffusionTrainResult result =
        gmix::train_denoiser(model, dataset, config);

    RunArtifacts artifacts;
    artifacts.run_dir = opts->run_dir;
    artifacts.effective = {{"command", "train-diffusion"},
                           {"data", opts->data},
                           {"steps", opts->steps},
                           {"batch", opts->batch},
                           {"lr", opts->lr},
                           {"seed", opts->seed},
                           {"t-max", opts->t_max},
                           {"beta-start", opts->beta_start},
                           {"beta-end", opts->beta_end},
                           {"code-len", opts->code_len},
                           {"hidden", opts->hidden},
                           {"with-head", opts->with_head},
                           {"lambda-cls", opts->lambda_cls},
                           {"cls-loss", opts->cls_loss},
                           {"resample-codes", opts->resample_codes},
                           {"out", opts->out}};
    const fs::path out = artifacts.resolve(opts->out);
    gmix::save_json(out, gmix::to_json(model));
    artifacts.note_output(out);
    if (!opts->curve.empty()) {
      std::string csv = "step,loss\n";
      for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
        csv += std::to_string(i) + "," + gmix::format_double(result.loss_curve[i]) + "\n";
      const fs::path cpath = artifacts.resolve(opts->curve);
      gmix::write_text(cpath, csv);
      artifacts.note_output(cpath);
    }
    artifacts.finalize("train-diffusion");
  });
}

void cmd_sample(CLI::App& app) {
  auto* cmd = app.add_subcommand("sample", "Generate from a trained diffusion model");
  struct SampleOpts {
    std::string config, model, out, attributes, features, run_dir;
    int n = 100;
    std::uint64_t seed = 1;
  };
  auto opts = std::make_shared<SampleOpts>();
  cmd->add_option("--config", opts->config, "JSON config file");
  cmd->add_option("--model", opts->model)->required();
  cmd->add_option("--n", opts->n, "sample count");
  cmd->add_option("--seed", opts->seed);
  cmd->add_option("--attributes", opts->attributes, "bitstring such as 1010");
  cmd->add_option("--features", opts->features,
                  "comma-separated active feature indices");
  cmd->add_option("--out", opts->out, "samples CSV")->required();
  cmd->add_option("--run-dir", opts->run_dir);

  cmd->callback([cmd, opts]() {
    ConfigLayer layer(cmd, opts->config);
    layer.resolve("n", opts->n);
    layer.resolve("seed", opts->seed);
    layer.resolve("attributes", opts->attributes);
    layer.resolve("features", opts->features);

    const gmix::DiffusionModel model =
        gmix::diffusion_from_json(gmix::load_json(opts->model));
    const auto attrs = parse_attributes(opts->attributes, opts->features,
                                        model.latent_spec.n_features);

    gmix::Rng rng = gmix::Rng::stream(opts->seed, 0x73616d70ULL);
    std::vector<Eigen::Vector2d> points;
    std::vector<std::vector<std::uint8_t>> attr_rows;
    for (int i = 0; i < opts->n; ++i) {
      const gmix::LatentCode code = gmix::sample_latent(model.latent_spec, attrs, rng);
      const Eigen::VectorXd x = gmix::sample(model, code, rng);
      points.emplace_back(x[0], x[1]);
      attr_rows.push_back(attrs);
    }

    RunArtifacts artifacts;
    artifacts.run_dir = opts->run_dir;
    artifacts.effective = {{"command", "sample"},       {"model", opts->model},
                           {"n", opts->n},              {"seed", opts->seed},
                           {"attributes", opts->attributes},
                           {"features", opts->features}, {"out", opts->out}};
    const fs::path out = artifacts.resolve(opts->out);
    gmix::write_point_csv(out, points, attr_rows);
    artifacts.note_output(out);
    artifacts.finalize("sample");
  });
}

void cmd_exp(CLI::App& app) {
  auto* cmd = app.add_subcommand("exp", "Comparative studies");
  cmd->require_subcommand(1);

  // ---- exp make-data
  auto* make_data = cmd->add_subcommand("make-data", "Emit the 2D cluster benchmark");
  struct MakeDataOpts {
    std::string config, out, labeling = "features";
    std::uint64_t seed = 1;
    int n = 2048;
  };
  auto md = std::make_shared<MakeDataOpts>();
  make_data->add_option("--config", md->config, "JSON config file");
  make_data->add_option("--out", md->out)->required();
  make_data->add_option("--n", md->n);
  make_data->add_option("--seed", md->seed);
  make_data->add_option("--labeling", md->labeling, "features | classes");
  make_data->callback([make_data, md]() {
    ConfigLayer layer(make_data, md->config);
    layer.resolve("n", md->n);
    layer.resolve("seed", md->seed);
    layer.resolve("labeling", md->labeling);
    gmix::Rng rng = gmix::Rng::stream(md->seed, 0x64617461ULL);
    const gmix::ClusterDataset data = gmix::make_cluster_dataset(md->n, rng);
    std::vector<std::vector<std::uint8_t>> attrs;
    for (int c : data.cluster)
      attrs.push_back(md->labeling == "classes" ? gmix::cluster_class_code(c)
                                                : gmix::cluster_features(c));
    gmix::write_point_csv(md->out, data.points, attrs);
  });

  // ---- exp ngmg-vs-bce
  auto* nvb = cmd->add_subcommand("ngmg-vs-bce",
                                  "20-trial NGMG-entropy vs BCE comparison");
  struct NgmgVsBceOpts {
    std::string config, out_dir = ".";
    int trials = 20, iters = 1500;
    std::uint64_t seed = 1;
    double lr = 50.0;
    bool svg = false;
  };
  auto nv = std::make_shared<NgmgVsBceOpts>();
  nvb->add_option("--config", nv->config, "JSON config file");
  nvb->add_option("--trials", nv->trials);
  nvb->add_option("--iters", nv->iters);
  nvb->add_option("--seed", nv->seed);
  nvb->add_option("--lr", nv->lr);
  nvb->add_option("--out-dir", nv->out_dir);
  nvb->add_flag("--svg", nv->svg, "emit per-trial MSE chart");
  nvb->callback([nvb, nv]() {
    ConfigLayer layer(nvb, nv->config);
    layer.resolve("trials", nv->trials);
    layer.resolve("iters", nv->iters);
    layer.resolve("seed", nv->seed);
    layer.resolve("lr", nv->lr);

    gmix::NgmgVsBceConfig config;
    config.trials = nv->trials;
    config.iterations = nv->iters;
    config.master_seed = nv->seed;
    config.learning_rate = nv->lr;
    const gmix::NgmgVsBceResult result = gmix::run_ngmg_vs_bce(config);

    fs::create_directories(nv->out_dir);
    std::string trials_csv = "trial,seed,loss,test_mse\n";
    for (int i = 0; i < config.trials; ++i) {
      trials_csv += std::to_string(i) + "," + std::to_string(result.bce[i].seed) +
                    ",bce," + gmix::format_double(result.bce[i].test_mse) + "\n";
      trials_csv += std::to_string(i) + "," + std::to_string(result.ngmg[i].seed) +
                    ",ngmg_two_sided," + gmix::format_double(result.ngmg[i].test_mse) +
                    "\n";
    }
    gmix::write_text(fs::path(nv->out_dir) / "trials.csv", trials_csv);

    std::string summary = "mean_mse_bce,mean_mse_ngmg,ngmg_wins,trials,sign_test_p\n" +
                          csv_row({result.mean_bce, result.mean_ngmg,
                                   static_cast<double>(result.ngmg_wins),
                                   static_cast<double>(config.trials),
                                   result.sign_test_p}) +
                          "\n";
    gmix::write_text(fs::path(nv->out_dir) / "summary.csv", summary);
    std::cout << summary;

    if (nv->svg) {
      gmix::PlotSeries b{"bce", {}, {}}, n{"ngmg_two_sided", {}, {}};
      for (int i = 0; i < config.trials; ++i) {
        b.x.push_back(i);
        b.y.push_back(result.bce[i].test_mse);
        n.x.push_back(i);
        n.y.push_back(result.ngmg[i].test_mse);
      }
      gmix::emit_plot({b, n}, "test MSE per trial",
                      fs::path(nv->out_dir) / "trials.svg");
    }

    json effective{{"command", "exp ngmg-vs-bce"}, {"trials", nv->trials},
                   {"iters", nv->iters},           {"seed", nv->seed},
                   {"lr", nv->lr},                 {"out-dir", nv->out_dir}};
    gmix::save_json(fs::path(nv->out_dir) / "config.json", effective);
    gmix::save_json(fs::path(nv->out_dir) / "status.json",
                    json{{"command", "exp ngmg-vs-bce"},
                         {"status", "ok"},
                         {"outputs", {"trials.csv", "summary.csv"}}});
  });

  // ---- exp feature-vs-class
  auto* fvc = cmd->add_subcommand("feature-vs-class",
                                  "Paired-seed defect comparison of latent labelings");
  struct FvcOpts {
    std::string config, out_dir = ".";
    int seeds = 5, steps = 24000, samples = 300;
    std::uint64_t seed = 1;
    bool control = false, svg = false;
  };
  auto fv = std::make_shared<FvcOpts>();
  fvc->add_option("--config", fv->config, "JSON config file");
  fvc->add_option("--seeds", fv->seeds, "number of paired seeds");
  fvc->add_option("--steps", fv->steps, "training steps per arm");
  fvc->add_option("--samples", fv->samples, "generated samples per arm");
  fvc->add_option("--seed", fv->seed, "master seed");
  fvc->add_option("--out-dir", fv->out_dir);
  fvc->add_flag("--control", fv->control, "run the class labeling in both arms");
  fvc->add_flag("--svg", fv->svg, "emit per-seed defect chart");
  fvc->callback([fvc, fv]() {
    ConfigLayer layer(fvc, fv->config);
    layer.resolve("seeds", fv->seeds);
    layer.resolve("steps", fv->steps);
    layer.resolve("samples", fv->samples);
    layer.resolve("seed", fv->seed);

    gmix::FeatureVsClassConfig config;
    config.n_seeds = fv->seeds;
    config.steps = fv->steps;
    config.samples_per_arm = fv->samples;
    config.master_seed = fv->seed;
    config.identical_control = fv->control;
    const gmix::FeatureVsClassResult result = gmix::run_feature_vs_class(config);

    fs::create_directories(fv->out_dir);
    std::string per_seed = "seed,feature_defect_rate,class_defect_rate\n";
    for (const auto& row : result.per_seed)
      per_seed += std::to_string(row.seed) + "," +
                  gmix::format_double(row.feature_arm.defect_rate) + "," +
                  gmix::format_double(row.class_arm.defect_rate) + "\n";
    gmix::write_text(fs::path(fv->out_dir) / "per_seed.csv", per_seed);

    std::string summary = "mean_feature_rate,mean_class_rate,tau,seeds\n" +
                          csv_row({result.mean_feature_rate, result.mean_class_rate,
                                   result.tau, static_cast<double>(fv->seeds)}) +
                          "\n";
    gmix::write_text(fs::path(fv->out_dir) / "summary.csv", summary);
    std::cout << summary;

    if (fv->svg) {
      gmix::PlotSeries f{"feature", {}, {}}, c{"class", {}, {}};
      for (std::size_t i = 0; i < result.per_seed.size(); ++i) {
        f.x.push_back(static_cast<double>(i));
        f.y.push_back(result.per_seed[i].feature_arm.defect_rate);
        c.x.push_back(static_cast<double>(i));
        c.y.push_back(result.per_seed[i].class_arm.defect_rate);
      }
      gmix::emit_plot({f, c}, "defect rate per seed",
                      fs::path(fv->out_dir) / "per_seed.svg");
    }

    json effective{{"command", "exp feature-vs-class"}, {"seeds", fv->seeds},
                   {"steps", fv->steps},                {"samples", fv->samples},
                   {"seed", fv->seed},                  {"control", fv->control},
                   {"out-dir", fv->out_dir}};
    gmix::save_json(fs::path(fv->out_dir) / "config.json", effective);
    gmix::save_json(fs::path(fv->out_dir) / "status.json",
                    json{{"command", "exp feature-vs-class"},
                         {"status", "ok"},
                         {"outputs", {"per_seed.csv", "summary.csv"}}});
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GMM-expansion toolkit: density fitting, W1 metrics, NGMG "
               "transport and losses, latent-conditioned diffusion"};
  app.require_subcommand(1);
  cmd_fit(app);
  cmd_w1(app);
  cmd_ngmg(app);
  cmd_transport(app);
  cmd_train_mlp(app);
  cmd_train_diffusion(app);
  cmd_sample(app);
  cmd_exp(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const gmix::IllConditionedKernel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
