#include "sigld/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sigld/serialize.hpp"

namespace sigld {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 70.0, kRight = 20.0, kTop = 40.0, kBottom = 50.0;

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double transform(double v) const { return log ? std::log10(v) : v; }
  bool valid(double v) const { return !log || v > 0.0; }
};

}  // namespace

std::string render_plot(const PlotSpec& spec) {
  Axis ax{0.0, 1.0, spec.log_x}, ay{0.0, 1.0, spec.log_y};

  bool any = false;
  double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
  auto grow = [&](double x, double y) {
    if (!ax.valid(x) || !ay.valid(y)) return;
    const double tx = ax.transform(x), ty = ay.transform(y);
    if (!any) {
      xlo = xhi = tx;
      ylo = yhi = ty;
      any = true;
    } else {
      xlo = std::min(xlo, tx);
      xhi = std::max(xhi, tx);
      ylo = std::min(ylo, ty);
      yhi = std::max(yhi, ty);
    }
  };
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) grow(s.x[i], s.y[i]);
  if (spec.band_lo <= spec.band_hi && any) {
    if (ay.valid(spec.band_lo)) {
      ylo = std::min(ylo, ay.transform(spec.band_lo));
      yhi = std::max(yhi, ay.transform(spec.band_hi));
    }
  }
  if (!any) {
    xlo = 0.0;
    xhi = 1.0;
    ylo = 0.0;
    yhi = 1.0;
  }
  if (xhi - xlo < 1e-12) {
    xlo -= 0.5;
    xhi += 0.5;
  }
  if (yhi - ylo < 1e-12) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  const double xpad = 0.05 * (xhi - xlo), ypad = 0.05 * (yhi - ylo);
  xlo -= xpad;
  xhi += xpad;
  ylo -= ypad;
  yhi += ypad;

  auto px = [&](double tx) { return kLeft + (tx - xlo) / (xhi - xlo) * (kWidth - kLeft - kRight); };
  auto py = [&](double ty) {
    return kHeight - kBottom - (ty - ylo) / (yhi - ylo) * (kHeight - kTop - kBottom);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  svg += "<rect width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) + "\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    svg += "<text x=\"" + fmt(kWidth / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           spec.title + "</text>\n";

  // band first so data draws on top
  if (spec.band_lo <= spec.band_hi && ay.valid(spec.band_lo)) {
    const double y0 = py(ay.transform(spec.band_hi)), y1 = py(ay.transform(spec.band_lo));
    svg += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(y0) + "\" width=\"" +
           fmt(kWidth - kLeft - kRight) + "\" height=\"" + fmt(y1 - y0) +
           "\" fill=\"#ffd33d\" fill-opacity=\"0.35\"/>\n";
  }

  // axes and ticks
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kHeight - kBottom) + "\" x2=\"" +
         fmt(kWidth - kRight) + "\" y2=\"" + fmt(kHeight - kBottom) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) +
         "\" y2=\"" + fmt(kHeight - kBottom) + "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double tx = xlo + (xhi - xlo) * i / 4.0;
    const double ty = ylo + (yhi - ylo) * i / 4.0;
    const double label_x = spec.log_x ? std::pow(10.0, tx) : tx;
    const double label_y = spec.log_y ? std::pow(10.0, ty) : ty;
    svg += "<line x1=\"" + fmt(px(tx)) + "\" y1=\"" + fmt(kHeight - kBottom) + "\" x2=\"" +
           fmt(px(tx)) + "\" y2=\"" + fmt(kHeight - kBottom + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt(px(tx)) + "\" y=\"" + fmt(kHeight - kBottom + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(label_x) +
           "</text>\n";
    svg += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(py(ty)) + "\" x2=\"" + fmt(kLeft) +
           "\" y2=\"" + fmt(py(ty)) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt(kLeft - 8) + "\" y=\"" + fmt(py(ty) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt(label_y) +
           "</text>\n";
  }
  if (!spec.x_label.empty())
    svg += "<text x=\"" + fmt((kLeft + kWidth - kRight) / 2) + "\" y=\"" + fmt(kHeight - 12) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" + spec.x_label +
           "</text>\n";
  if (!spec.y_label.empty())
    svg += "<text x=\"16\" y=\"" + fmt((kTop + kHeight - kBottom) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 16 " +
           fmt((kTop + kHeight - kBottom) / 2) + ")\">" + spec.y_label + "</text>\n";

  // fit line in transformed coordinates, annotated with its slope
  if (spec.draw_fit) {
    const double y0 = spec.fit_intercept + spec.fit_slope * xlo;
    const double y1 = spec.fit_intercept + spec.fit_slope * xhi;
    svg += "<line x1=\"" + fmt(px(xlo)) + "\" y1=\"" + fmt(py(y0)) + "\" x2=\"" + fmt(px(xhi)) +
           "\" y2=\"" + fmt(py(y1)) +
           "\" stroke=\"#d1242f\" stroke-width=\"1.5\" stroke-dasharray=\"6 3\"/>\n";
    const std::string label = spec.fit_label.empty() ? "slope " + fmt(spec.fit_slope) : spec.fit_label;
    svg += "<text x=\"" + fmt(kWidth - kRight - 6) + "\" y=\"" + fmt(kTop + 14) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d1242f\">" +
           label + "</text>\n";
  }

  int legend_row = 0;
  for (const auto& s : spec.series) {
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!ax.valid(s.x[i]) || !ay.valid(s.y[i])) continue;
      const double cx = px(ax.transform(s.x[i])), cy = py(ay.transform(s.y[i]));
      svg += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"3\" fill=\"" + s.color +
             "\"/>\n";
      if (!pts.empty()) pts += " ";
      pts += fmt(cx) + "," + fmt(cy);
    }
    if (s.x.size() > 1 && !pts.empty())
      svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
             "\" stroke-width=\"1\"/>\n";
    if (!s.label.empty()) {
      const double ly = kTop + 14 + 16.0 * (legend_row + (spec.draw_fit ? 1 : 0));
      svg += "<circle cx=\"" + fmt(kLeft + 10) + "\" cy=\"" + fmt(ly - 4) + "\" r=\"3\" fill=\"" +
             s.color + "\"/>\n";
      svg += "<text x=\"" + fmt(kLeft + 18) + "\" y=\"" + fmt(ly) +
             "\" font-family=\"sans-serif\" font-size=\"12\">" + s.label + "</text>\n";
      ++legend_row;
    }
  }
  svg += "</svg>\n";
  return svg;
}

void emit_plot(const PlotSpec& spec, const std::string& path) {
  write_text_file(path, render_plot(spec));
}

}  // namespace sigld
