#pragma once

#include <string>
#include <vector>

namespace ddro {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

// Static SVG line chart with axes, ticks and a legend. Nonpositive values
// on a log axis are dropped from the polyline.
std::string render_line_plot_svg(const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace ddro
