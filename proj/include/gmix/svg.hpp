// Self-contained SVG line charts for traces and experiment summaries.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gmix {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Writes a line chart with axes, min/max tick labels, and a legend.
// Throws on empty series or unwritable paths; no file is created on error.
void emit_plot(const std::vector<PlotSeries>& series, const std::string& title,
               const std::filesystem::path& path);

}  // namespace gmix
