#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace evolve {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Self-contained log-log plot, fixed 800x600 viewBox.
void write_loglog_svg(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series);

}  // namespace evolve
