#include "monoid/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "monoid/error.hpp"
#include "monoid/io.hpp"

namespace monoid {

void write_svg_plot(const std::filesystem::path& path, const std::vector<double>& x,
                    const std::vector<PlotSeries>& series, const std::string& title) {
  constexpr double width = 800.0;
  constexpr double height = 450.0;
  constexpr double margin = 50.0;
  if (x.size() < 2) throw DomainError("plot needs at least two abscissa values");

  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -y_min;
  for (const PlotSeries& s : series) {
    if (s.y.size() != x.size()) throw ShapeError("plot series '" + s.label + "' has the wrong length");
    for (const double y : s.y) {
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (!(y_max > y_min)) {
    y_min -= 1.0;
    y_max += 1.0;
  }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;
  const double x_min = x.front();
  const double x_max = x.back();
  auto px = [&](double v) { return margin + (v - x_min) / (x_max - x_min) * (width - 2 * margin); };
  auto py = [&](double v) { return height - margin - (v - y_min) / (y_max - y_min) * (height - 2 * margin); };

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" << title << "</text>\n"
      << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
      << "\" height=\"" << height - 2 * margin << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double yv = y_min + (y_max - y_min) * tick / 4.0;
    const double xv = x_min + (x_max - x_min) * tick / 4.0;
    out << "<text x=\"" << margin - 6 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << io::format_double(std::round(yv * 100) / 100) << "</text>\n"
        << "<text x=\"" << px(xv) << "\" y=\"" << height - margin + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << io::format_double(std::round(xv * 100) / 100) << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << series[s].color << "\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) out << px(x[i]) << ',' << py(series[s].y[i]) << ' ';
    out << "\"/>\n"
        << "<text x=\"" << width - margin - 4 << "\" y=\"" << margin + 16 + 16 * static_cast<double>(s)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << series[s].color << "\">" << series[s].label << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace monoid
