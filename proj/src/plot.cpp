#include "ddro/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ddro {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '&':
        out += "&amp;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;

  double transform(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
};

void fit_axis(Axis& axis, const std::vector<double>& values) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (axis.usable(v)) {
      lo = std::min(lo, axis.transform(v));
      hi = std::max(hi, axis.transform(v));
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  axis.lo = lo;
  axis.hi = hi;
}

}  // namespace

std::string render_line_plot_svg(const PlotSpec& spec, const std::vector<Series>& series) {
  Axis ax{spec.log_x};
  Axis ay{spec.log_y};
  std::vector<double> xs, ys;
  for (const Series& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  fit_axis(ax, xs);
  fit_axis(ay, ys);

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (ax.transform(v) - ax.lo) / (ax.hi - ax.lo) * pw; };
  auto py = [&](double v) {
    return kTop + ph - (ay.transform(v) - ay.lo) / (ay.hi - ay.lo) * ph;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(spec.title) << "</text>\n";
  svg << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = ax.lo + (ax.hi - ax.lo) * i / kTicks;
    const double fy = ay.lo + (ay.hi - ay.lo) * i / kTicks;
    const double vx = ax.log ? std::pow(10.0, fx) : fx;
    const double vy = ay.log ? std::pow(10.0, fy) : fy;
    const double sx = kLeft + pw * i / kTicks;
    const double sy = kTop + ph - ph * i / kTicks;
    svg << "<line x1=\"" << num(sx) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(sx)
        << "\" y2=\"" << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(sx) << "\" y=\"" << num(kTop + ph + 18)
        << "\" text-anchor=\"middle\">" << tick_label(vx) << "</text>\n";
    svg << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(sy) << "\" x2=\"" << num(kLeft)
        << "\" y2=\"" << num(sy) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(sy + 4)
        << "\" text-anchor=\"end\">" << tick_label(vy) << "</text>\n";
  }
  svg << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 16)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << num(kTop + ph / 2) << ")\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) {
        continue;
      }
      svg << (first ? "" : " ") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
      first = false;
    }
    svg << "\"/>\n";
    const double ly = kTop + 14.0 + 18.0 * static_cast<double>(si);
    const double lx = kLeft + pw + 12.0;
    svg << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 20)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << num(lx + 26) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ddro
