#pragma once

#include <string>
#include <vector>

namespace sigld {

struct PlotSeries {
  std::string label;
  std::string color = "#1f6feb";
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title;
  std::string x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<PlotSeries> series;
  // horizontal band (e.g. a rate band); skipped when lo > hi
  double band_lo = 1.0, band_hi = 0.0;
  // straight line y = slope*x + intercept drawn across the x range
  // (transformed coordinates on log axes), annotated; skipped unless enabled
  bool draw_fit = false;
  double fit_slope = 0.0, fit_intercept = 0.0;
  std::string fit_label;  // defaults to "slope <fit_slope>"
};

// Minimal static SVG scatter/line plot; byte-deterministic for identical
// inputs. An empty spec still produces a valid axes-only document.
std::string render_plot(const PlotSpec& spec);
void emit_plot(const PlotSpec& spec, const std::string& path);

}  // namespace sigld
