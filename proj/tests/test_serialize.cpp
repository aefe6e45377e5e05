#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gmix/serialize.hpp"
#include "gmix/svg.hpp"

using namespace gmix;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("gmix_test_" + std::to_string(std::rand()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("basis and weights json round trip") {
  const Basis b = build_basis(7, -1.5, 2.5, 0.3);
  const Basis back = basis_from_json(to_json(b));
  CHECK(back.means() == b.means());
  CHECK(back.scale() == b.scale());
  CHECK(back.support_lo() == b.support_lo());
  CHECK(back.support_hi() == b.support_hi());

  Rng rng(1);
  std::vector<double> data;
  for (int i = 0; i < 30; ++i) data.push_back(rng.uniform(-1.5, 2.5));
  const WeightVector w = fit_weights(b, data).weights;
  const WeightVector wb = weights_from_json(to_json(w));
  CHECK(wb.values() == w.values());

  nlohmann::json bad = to_json(w);
  bad["n"] = 3;
  CHECK_THROWS_AS(weights_from_json(bad), std::invalid_argument);
}

TEST_CASE("mlp json round trip reproduces the forward pass bit for bit") {
  Rng rng(2);
  const Mlp m =
      make_mlp({3, 16, 8, 2}, HiddenActivation::tanh_, OutputActivation::sigmoid, rng);
  const Mlp back = mlp_from_json(to_json(m));
  Eigen::VectorXd x(3);
  x << 0.123456789123456789, -2.5, 1e-7;
  CHECK(forward(back, x) == forward(m, x));

  TempDir tmp;
  save_json(tmp.path / "model.json", to_json(m));
  const Mlp loaded = mlp_from_json(load_json(tmp.path / "model.json"));
  CHECK(forward(loaded, x) == forward(m, x));
}

TEST_CASE("diffusion model json round trip") {
  LatentSpec spec;
  spec.n_features = 3;
  spec.code_len = 2;
  Rng rng(3);
  DiffusionModel model =
      make_diffusion_model(2, spec, build_schedule(25, 0.01, 0.15), {8, 8}, rng, true);
  const DiffusionModel back = diffusion_from_json(to_json(model));
  CHECK(back.schedule.alpha_bar == model.schedule.alpha_bar);
  CHECK(back.data_dim == 2);
  REQUIRE(back.classifier_head.has_value());

  const LatentCode code = sample_latent(spec, {1, 0, 1}, rng);
  Eigen::VectorXd x(2);
  x << 0.4, -0.9;
  CHECK(denoise(back, x, 7, code) == denoise(model, x, 7, code));
  CHECK(classify(back, x, 7, code) == classify(model, x, 7, code));
}

TEST_CASE("value file reader") {
  TempDir tmp;
  write_text(tmp.path / "data.txt", "0.5\n-1.25\n\n3e-2\n");
  const auto values = read_value_file(tmp.path / "data.txt");
  REQUIRE(values.size() == 3);
  CHECK(values[1] == -1.25);
  CHECK(values[2] == 0.03);

  write_text(tmp.path / "bad.txt", "hello\n");
  CHECK_THROWS_AS(read_value_file(tmp.path / "bad.txt"), std::runtime_error);
  CHECK_THROWS_AS(read_value_file(tmp.path / "missing.txt"), std::runtime_error);
}

TEST_CASE("point csv round trip") {
  TempDir tmp;
  std::vector<Eigen::Vector2d> pts{{0.25, -1.5}, {1e-9, 2.0}};
  std::vector<std::vector<std::uint8_t>> attrs{{1, 0, 1, 1}, {0, 0, 0, 1}};
  write_point_csv(tmp.path / "d.csv", pts, attrs);
  const PointAttributeData back = read_point_csv(tmp.path / "d.csv");
  REQUIRE(back.points.size() == 2);
  CHECK(back.points[0] == pts[0]);
  CHECK(back.points[1] == pts[1]);
  CHECK(back.attributes == attrs);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("svg emitter") {
  TempDir tmp;
  const auto path = tmp.path / "plot.svg";

  SUBCASE("single point series renders a marker") {
    emit_plot({{"only", {1.0}, {2.0}}}, "t", path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("<circle") != std::string::npos);
    CHECK(text.find("</svg>") != std::string::npos);
  }

  SUBCASE("two series render two paths and a legend") {
    emit_plot({{"a", {0, 1, 2}, {1, 2, 3}}, {"b", {0, 1, 2}, {3, 1, 0}}}, "t", path);
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    CHECK(std::count(text.begin(), text.end(), '\n') > 5);
    CHECK(text.find(">a</text>") != std::string::npos);
    CHECK(text.find(">b</text>") != std::string::npos);
    CHECK(text.find("polyline") != std::string::npos);
  }

  SUBCASE("empty series error leaves no file behind") {
    CHECK_THROWS_AS(emit_plot({}, "t", path), std::invalid_argument);
    CHECK_THROWS_AS(emit_plot({{"x", {}, {}}}, "t", path), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(path));
  }
}
