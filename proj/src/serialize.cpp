#include "gmix/serialize.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmix {

namespace {

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

std::string activation_name(HiddenActivation a) {
  return a == HiddenActivation::relu ? "relu" : "tanh";
}

HiddenActivation hidden_from_name(const std::string& s) {
  if (s == "relu") return HiddenActivation::relu;
  if (s == "tanh") return HiddenActivation::tanh_;
  throw std::invalid_argument("unknown hidden activation: " + s);
}

std::string activation_name(OutputActivation a) {
  return a == OutputActivation::sigmoid ? "sigmoid" : "identity";
}

OutputActivation output_from_name(const std::string& s) {
  if (s == "sigmoid") return OutputActivation::sigmoid;
  if (s == "identity") return OutputActivation::identity;
  throw std::invalid_argument("unknown output activation: " + s);
}

}  // namespace

nlohmann::json to_json(const Basis& basis) {
  return {{"n_components", basis.size()},
          {"means", to_vec(basis.means())},
          {"scale", basis.scale()},
          {"support_lo", basis.support_lo()},
          {"support_hi", basis.support_hi()}};
}

Basis basis_from_json(const nlohmann::json& j) {
  return Basis(j.at("n_components").get<int>(),
               from_vec(j.at("means").get<std::vector<double>>()),
               j.at("scale").get<double>(), j.at("support_lo").get<double>(),
               j.at("support_hi").get<double>());
}

nlohmann::json to_json(const WeightVector& weights) {
  return {{"n", weights.size()}, {"weights", to_vec(weights.values())}};
}

WeightVector weights_from_json(const nlohmann::json& j) {
  const auto values = j.at("weights").get<std::vector<double>>();
  if (j.contains("n") && j.at("n").get<int>() != static_cast<int>(values.size()))
    throw std::invalid_argument("weights: declared length mismatch");
  return WeightVector(from_vec(values));
}

nlohmann::json to_json(const Mlp& m) {
  nlohmann::json weights = nlohmann::json::array();
  nlohmann::json biases = nlohmann::json::array();
  for (int l = 0; l < m.layer_count(); ++l) {
    std::vector<double> w;
    w.reserve(m.weights[l].size());
    for (int r = 0; r < m.weights[l].rows(); ++r)
      for (int c = 0; c < m.weights[l].cols(); ++c) w.push_back(m.weights[l](r, c));
    weights.push_back(w);
    biases.push_back(to_vec(m.biases[l]));
  }
  return {{"layer_sizes", m.layer_sizes},
          {"hidden_activation", activation_name(m.hidden_activation)},
          {"output_activation", activation_name(m.output_activation)},
          {"weights", weights},
          {"biases", biases}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m;
  m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (m.layer_sizes.size() < 2) throw std::invalid_argument("mlp json: bad layer sizes");
  m.hidden_activation = hidden_from_name(j.at("hidden_activation").get<std::string>());
  m.output_activation = output_from_name(j.at("output_activation").get<std::string>());
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  if (weights.size() + 1 != m.layer_sizes.size() || biases.size() != weights.size())
    throw std::invalid_argument("mlp json: layer count mismatch");
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const int rows = m.layer_sizes[l + 1];
    const int cols = m.layer_sizes[l];
    const auto w = weights[l].get<std::vector<double>>();
    if (static_cast<int>(w.size()) != rows * cols)
      throw std::invalid_argument("mlp json: weight size mismatch");
    Eigen::MatrixXd mat(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) mat(r, c) = w[r * cols + c];
    m.weights.push_back(std::move(mat));
    const auto b = biases[l].get<std::vector<double>>();
    if (static_cast<int>(b.size()) != rows)
      throw std::invalid_argument("mlp json: bias size mismatch");
    m.biases.push_back(from_vec(b));
  }
  return m;
}

nlohmann::json to_json(const DiffusionModel& model) {
  nlohmann::json j{
      {"net", to_json(model.net)},
      {"data_dim", model.data_dim},
      {"schedule",
       {{"t_max", model.schedule.t_max},
        {"beta_start", model.schedule.beta_start},
        {"beta_end", model.schedule.beta_end}}},
      {"latent_spec",
       {{"n_features", model.latent_spec.n_features},
        {"code_len", model.latent_spec.code_len},
        {"component_means", model.latent_spec.component_means},
        {"component_scale", model.latent_spec.component_scale},
        {"component_weights", model.latent_spec.component_weights}}}};
  if (model.classifier_head) j["classifier_head"] = to_json(*model.classifier_head);
  return j;
}

DiffusionModel diffusion_from_json(const nlohmann::json& j) {
  const auto& sj = j.at("schedule");
  const auto& lj = j.at("latent_spec");
  LatentSpec spec;
  spec.n_features = lj.at("n_features").get<int>();
  spec.code_len = lj.at("code_len").get<int>();
  spec.component_means = lj.at("component_means").get<std::array<double, 3>>();
  spec.component_scale = lj.at("component_scale").get<double>();
  spec.component_weights = lj.at("component_weights").get<std::array<double, 3>>();
  spec.validate();
  DiffusionModel model{
      mlp_from_json(j.at("net")),
      build_schedule(sj.at("t_max").get<int>(), sj.at("beta_start").get<double>(),
                     sj.at("beta_end").get<double>()),
      spec, j.at("data_dim").get<int>(), std::nullopt};
  if (j.contains("classifier_head"))
    model.classifier_head = mlp_from_json(j.at("classifier_head"));
  return model;
}

void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  in >> j;
  return j;
}

std::vector<double> read_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw std::runtime_error("bad numeric line in " + path.string() + ": " + line);
    }
  }
  if (values.empty()) throw std::runtime_error("no data in " + path.string());
  return values;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_point_csv(const std::filesystem::path& path,
                     const std::vector<Eigen::Vector2d>& points,
                     const std::vector<std::vector<std::uint8_t>>& attributes) {
  if (points.size() != attributes.size())
    throw std::invalid_argument("write_point_csv: size mismatch");
  std::ostringstream out;
  const std::size_t k = attributes.empty() ? 0 : attributes.front().size();
  out << "x,y";
  for (std::size_t i = 0; i < k; ++i) out << ",A" << i + 1;
  out << "\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << format_double(points[i][0]) << "," << format_double(points[i][1]);
    for (std::uint8_t a : attributes[i]) out << "," << (a ? 1 : 0);
    out << "\n";
  }
  write_text(path, out.str());
}

PointAttributeData read_point_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  PointAttributeData data;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path.string());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw std::runtime_error("bad csv row: " + line);
    data.points.emplace_back(std::stod(cells[0]), std::stod(cells[1]));
    std::vector<std::uint8_t> attrs;
    for (std::size_t i = 2; i < cells.size(); ++i)
      attrs.push_back(cells[i] == "1" ? 1 : 0);
    data.attributes.push_back(std::move(attrs));
  }
  if (data.points.empty()) throw std::runtime_error("no rows in " + path.string());
  return data;
}

}  // namespace gmix
