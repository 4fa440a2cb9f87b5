#pragma once

// Static SVG line plots: mean lines with +-std bands over a log-scaled x
// axis, plus an optional dashed reference line.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lrpprune/csv.hpp"
#include "lrpprune/error.hpp"

namespace lrpprune::plot {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x, mean, std;
};

struct Figure {
  std::string title;
  std::string x_label = "reference samples per class (n)";
  std::string y_label = "accuracy [%]";
  std::vector<Series> series;
  double reference = std::nan("");  // dashed horizontal line
};

inline std::string render_svg(const Figure& fig) {
  constexpr double W = 480, H = 340, L = 60, R = 120, T = 36, B = 48;
  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  for (const auto& s : fig.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.mean[i] - s.std[i]);
      y_hi = std::max(y_hi, s.mean[i] + s.std[i]);
    }
  if (std::isfinite(fig.reference)) {
    y_lo = std::min(y_lo, fig.reference);
    y_hi = std::max(y_hi, fig.reference);
  }
  if (!std::isfinite(x_lo)) throw ConfigError("figure has no data");
  y_lo = std::max(0.0, std::floor(y_lo / 5.0) * 5.0);
  y_hi = std::min(100.0, std::ceil(y_hi / 5.0) * 5.0);
  if (y_hi <= y_lo) y_hi = y_lo + 1.0;
  const double lx_lo = std::log10(std::max(x_lo, 1e-9)), lx_hi = std::log10(std::max(x_hi, 1e-9));
  auto px = [&](double x) {
    const double span = lx_hi > lx_lo ? lx_hi - lx_lo : 1.0;
    return L + (std::log10(std::max(x, 1e-9)) - lx_lo) / span * (W - L - R);
  };
  auto py = [&](double y) { return T + (y_hi - y) / (y_hi - y_lo) * (H - T - B); };
  auto num = [](double v) { return csv::fixed(v, 2); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"13\">" << fig.title << "</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = y_lo + (y_hi - y_lo) * i / 5.0;
    svg << "<text x=\"" << L - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << csv::fixed(y, 1)
        << "</text>\n";
  }
  if (!fig.series.empty())
    for (double x : fig.series.front().x)
      svg << "<text x=\"" << num(px(x)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << x
          << "</text>\n";
  svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << fig.x_label
      << "</text>\n";
  svg << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << fig.y_label << "</text>\n";
  if (std::isfinite(fig.reference))
    svg << "<line x1=\"" << L << "\" y1=\"" << num(py(fig.reference)) << "\" x2=\"" << W - R << "\" y2=\""
        << num(py(fig.reference)) << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  double legend_y = T + 10;
  for (const auto& s : fig.series) {
    std::ostringstream band, line;
    for (std::size_t i = 0; i < s.x.size(); ++i)
      band << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.mean[i] + s.std[i]));
    for (std::size_t i = s.x.size(); i-- > 0;) band << ' ' << num(px(s.x[i])) << ',' << num(py(s.mean[i] - s.std[i]));
    for (std::size_t i = 0; i < s.x.size(); ++i)
      line << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.mean[i]));
    svg << "<polygon points=\"" << band.str() << "\" fill=\"" << s.color << "\" fill-opacity=\"0.15\"/>\n";
    svg << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<line x1=\"" << W - R + 10 << "\" y1=\"" << legend_y << "\" x2=\"" << W - R + 30 << "\" y2=\"" << legend_y
        << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << W - R + 35 << "\" y=\"" << legend_y + 4 << "\">" << s.label << "</text>\n";
    legend_y += 16;
  }
  svg << "</svg>\n";
  return svg.str();
}

inline void write_svg(const std::string& path, const Figure& fig) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << render_svg(fig);
}

}  // namespace lrpprune::plot
