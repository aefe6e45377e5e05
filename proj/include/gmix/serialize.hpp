// JSON round-trips for the persistent artifacts and small file helpers.
#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gmix/basis.hpp"
#include "gmix/diffusion.hpp"
#include "gmix/experiments.hpp"
#include "gmix/net.hpp"

namespace gmix {

nlohmann::json to_json(const Basis& basis);
Basis basis_from_json(const nlohmann::json& j);

nlohmann::json to_json(const WeightVector& weights);
WeightVector weights_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Mlp& m);
Mlp mlp_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DiffusionModel& model);
DiffusionModel diffusion_from_json(const nlohmann::json& j);

void save_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json load_json(const std::filesystem::path& path);

// One-value-per-line numeric data.
std::vector<double> read_value_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

// CSV with header "x,y,A_1..A_K": points plus binary attributes.
void write_point_csv(const std::filesystem::path& path,
                     const std::vector<Eigen::Vector2d>& points,
                     const std::vector<std::vector<std::uint8_t>>& attributes);

struct PointAttributeData {
  std::vector<Eigen::Vector2d> points;
  std::vector<std::vector<std::uint8_t>> attributes;
};

PointAttributeData read_point_csv(const std::filesystem::path& path);

// Full-precision decimal formatting (round-trip exact for doubles).
std::string format_double(double v);

}  // namespace gmix
