#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace monoid {

struct PlotSeries {
  std::string label;
  std::string color;
  std::vector<double> y;
};

/// Static SVG line chart of several series sharing one abscissa.
void write_svg_plot(const std::filesystem::path& path, const std::vector<double>& x,
                    const std::vector<PlotSeries>& series, const std::string& title);

}  // namespace monoid
