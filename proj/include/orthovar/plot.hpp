#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace orthovar::plot {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<std::optional<double>> y;  // gaps where null
};

struct ChartSpec {
  std::string title;
  std::string x_label = "k";
  std::string y_label;
  std::optional<double> y_min;
  std::optional<double> y_max;
};

/// Writes a standalone SVG line chart, one polyline and legend entry per series.
void write_line_chart(const std::filesystem::path& path, const ChartSpec& spec,
                      const std::vector<Series>& series);

}  // namespace orthovar::plot
