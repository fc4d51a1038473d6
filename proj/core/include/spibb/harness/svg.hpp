#pragma once

#include <string>
#include <vector>

namespace spibb::harness::svg {

struct Bar {
  std::string label;
  double value = 0.0;
  double error = 0.0;  ///< half-height of the error bar
};

struct BarGroup {
  std::string label;
  std::vector<Bar> bars;
};

/// Grouped bar chart with error bars, as a standalone SVG document.
std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups);

/// Heatmap where darker cells hold larger values. values[r][c] may be NaN
/// for missing cells, drawn in light grey.
std::string heatmap(const std::string& title, const std::string& row_axis, const std::vector<std::string>& rows,
                    const std::string& col_axis, const std::vector<std::string>& cols,
                    const std::vector<std::vector<double>>& values);

}  // namespace spibb::harness::svg
