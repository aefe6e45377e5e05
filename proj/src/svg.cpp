#include "gmix/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmix {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 32.0;
constexpr double kMarginBottom = 40.0;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace

void emit_plot(const std::vector<PlotSeries>& series, const std::string& title,
               const std::filesystem::path& path) {
  if (series.empty()) throw std::invalid_argument("emit_plot: no series");
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size())
      throw std::invalid_argument("emit_plot: empty or ragged series");
  }

  double x_lo = series[0].x[0], x_hi = x_lo, y_lo = series[0].y[0], y_hi = y_lo;
  for (const auto& s : series) {
    for (double v : s.x) {
      x_lo = std::min(x_lo, v);
      x_hi = std::max(x_hi, v);
    }
    for (double v : s.y) {
      y_lo = std::min(y_lo, v);
      y_hi = std::max(y_hi, v);
    }
  }
  if (x_hi == x_lo) {
    x_lo -= 0.5;
    x_hi += 0.5;
  }
  if (y_hi == y_lo) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return kMarginLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) {
    return kMarginTop + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  if (!title.empty())
    out << "<text x=\"" << kWidth / 2
        << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
        << "</text>\n";

  // Axes with min/max labels.
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
      << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\""
      << kMarginLeft << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kMarginLeft << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\">" << fmt(x_lo) << "</text>\n";
  out << "<text x=\"" << kMarginLeft + plot_w << "\" y=\"" << kHeight - 16
      << "\" text-anchor=\"middle\">" << fmt(x_hi) << "</text>\n";
  out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + plot_h
      << "\" text-anchor=\"end\">" << fmt(y_lo) << "</text>\n";
  out << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + 10
      << "\" text-anchor=\"end\">" << fmt(y_hi) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (s.x.size() == 1) {
      out << "<circle cx=\"" << px(s.x[0]) << "\" cy=\"" << py(s.y[0])
          << "\" r=\"4\" fill=\"" << color << "\"/>\n";
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k)
        out << px(s.x[k]) << "," << py(s.y[k]) << " ";
      out << "\"/>\n";
    }
    const double ly = kMarginTop + 14.0 * (i + 1);
    out << "<line x1=\"" << kMarginLeft + plot_w - 120 << "\" y1=\"" << ly - 4
        << "\" x2=\"" << kMarginLeft + plot_w - 100 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kMarginLeft + plot_w - 94 << "\" y=\"" << ly << "\">"
        << s.label << "</text>\n";
  }
  out << "</svg>\n";

  std::ofstream file(path);
  if (!file) throw std::runtime_error("emit_plot: cannot write " + path.string());
  file << out.str();
  if (!file) throw std::runtime_error("emit_plot: write failed " + path.string());
}

}  // namespace gmix
