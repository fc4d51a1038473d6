#include "spibb/harness/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "spibb/harness/format.hpp"

namespace spibb::harness::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string n(double v) { return format_fixed(v, 2); }

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                          "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + n(w) + "\" height=\"" + n(h) +
         "\" viewBox=\"0 0 " + n(w) + " " + n(h) + "\" font-family=\"sans-serif\" font-size=\"11\">\n" +
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", const std::string& extra = "") {
  return "<text x=\"" + n(x) + "\" y=\"" + n(y) + "\" text-anchor=\"" + anchor + "\"" + extra + ">" + escape(s) +
         "</text>\n";
}

}  // namespace

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<BarGroup>& groups) {
  std::vector<std::string> series;
  double lo = 0.0, hi = 0.0;
  for (const auto& g : groups) {
    for (const auto& b : g.bars) {
      if (std::find(series.begin(), series.end(), b.label) == series.end()) series.push_back(b.label);
      lo = std::min(lo, b.value - b.error);
      hi = std::max(hi, b.value + b.error);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const double bar_w = 18.0, gap = 24.0, left = 70.0, top = 40.0, plot_h = 260.0;
  double width = left + 20.0;
  for (const auto& g : groups) width += static_cast<double>(g.bars.size()) * bar_w + gap;
  width = std::max(width, 320.0) + 140.0;
  const double height = top + plot_h + 60.0;
  auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::string out = header(width, height);
  out += text(width / 2, 20, title, "middle", " font-size=\"14\"");
  out += "<line x1=\"" + n(left) + "\" y1=\"" + n(top) + "\" x2=\"" + n(left) + "\" y2=\"" + n(top + plot_h) +
         "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + n(left) + "\" y1=\"" + n(y_of(0)) + "\" x2=\"" + n(width - 140) + "\" y2=\"" + n(y_of(0)) +
         "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    out += text(left - 6, y_of(v) + 4, format_fixed(v, 1), "end");
  }
  out += text(16, top + plot_h / 2, y_label, "middle",
              " transform=\"rotate(-90 16 " + n(top + plot_h / 2) + ")\"");

  double x = left + 10.0;
  for (const auto& g : groups) {
    const double start = x;
    for (const auto& b : g.bars) {
      const auto idx = std::find(series.begin(), series.end(), b.label) - series.begin();
      const char* color = kPalette[idx % 10];
      const double y0 = y_of(std::max(b.value, 0.0)), y1 = y_of(std::min(b.value, 0.0));
      out += "<rect x=\"" + n(x) + "\" y=\"" + n(y0) + "\" width=\"" + n(bar_w - 2) + "\" height=\"" + n(y1 - y0) +
             "\" fill=\"" + color + "\"/>\n";
      const double cx = x + (bar_w - 2) / 2;
      out += "<line x1=\"" + n(cx) + "\" y1=\"" + n(y_of(b.value - b.error)) + "\" x2=\"" + n(cx) + "\" y2=\"" +
             n(y_of(b.value + b.error)) + "\" stroke=\"black\"/>\n";
      x += bar_w;
    }
    out += text((start + x) / 2, top + plot_h + 18, g.label);
    x += gap;
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double ly = top + 14.0 * static_cast<double>(i);
    out += "<rect x=\"" + n(width - 130) + "\" y=\"" + n(ly) + "\" width=\"10\" height=\"10\" fill=\"" +
           kPalette[i % 10] + "\"/>\n";
    out += text(width - 115, ly + 9, series[i], "start");
  }
  out += "</svg>\n";
  return out;
}

std::string heatmap(const std::string& title, const std::string& row_axis, const std::vector<std::string>& rows,
                    const std::string& col_axis, const std::vector<std::string>& cols,
                    const std::vector<std::vector<double>>& values) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : values)
    for (double v : r)
      if (!std::isnan(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  const double cell = 56.0, left = 90.0, top = 50.0;
  const double width = left + cell * static_cast<double>(cols.size()) + 30.0;
  const double height = top + cell * static_cast<double>(rows.size()) + 50.0;
  std::string out = header(width, height);
  out += text(width / 2, 20, title, "middle", " font-size=\"14\"");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double y = top + cell * static_cast<double>(r);
    out += text(left - 6, y + cell / 2 + 4, rows[r], "end");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double x = left + cell * static_cast<double>(c);
      const double v = values[r][c];
      std::string fill = "#eeeeee";
      std::string label = "-";
      bool dark = false;
      if (!std::isnan(v)) {
        const double t = hi > lo ? (v - lo) / (hi - lo) : 1.0;
        const int shade = static_cast<int>(std::lround(235.0 - 200.0 * t));
        char buf[8];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", shade / 2, shade / 2 + 20, shade);
        fill = buf;
        label = format_fixed(v, 1);
        dark = t > 0.5;
      }
      out += "<rect x=\"" + n(x) + "\" y=\"" + n(y) + "\" width=\"" + n(cell) + "\" height=\"" + n(cell) +
             "\" fill=\"" + fill + "\" stroke=\"white\"/>\n";
      out += text(x + cell / 2, y + cell / 2 + 4, label, "middle", dark ? " fill=\"white\"" : "");
    }
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out += text(left + cell * (static_cast<double>(c) + 0.5), top + cell * static_cast<double>(rows.size()) + 16, cols[c]);
  }
  out += text(left + cell * static_cast<double>(cols.size()) / 2, height - 10, col_axis);
  out += text(14, top + cell * static_cast<double>(rows.size()) / 2, row_axis, "middle",
              " transform=\"rotate(-90 14 " + n(top + cell * static_cast<double>(rows.size()) / 2) + ")\"");
  out += "</svg>\n";
  return out;
}

}  // namespace spibb::harness::svg
