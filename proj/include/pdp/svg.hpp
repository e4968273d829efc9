#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace pdp {

// One plotted series: a mean line over x with a symmetric band (half-width
// per point, e.g. a 95% normal-approximation interval across seeds).
struct SeriesBand {
  std::string label;
  std::vector<double> x;
  std::vector<double> mean;
  std::vector<double> half;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

// Deterministic line chart with shaded confidence bands. Output depends only
// on the input records, so identical runs produce identical bytes.
inline std::string render_line_chart(const std::string& title, const std::string& y_label,
                                     const std::vector<SeriesBand>& series,
                                     double x_min_clip = 0.0) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  const double width = 860, height = 520;
  const double ml = 90, mr = 200, mt = 50, mb = 60;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.x[i] < x_min_clip) continue;
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, s.mean[i] - s.half[i]);
      y_hi = std::max(y_hi, s.mean[i] + s.half[i]);
    }
  }
  if (x_lo > x_hi) {
    x_lo = 0;
    x_hi = 1;
  }
  if (y_lo > y_hi) {
    y_lo = 0;
    y_hi = 1;
  }
  if (y_hi - y_lo < 1e-12) {
    y_lo -= 0.5;
    y_hi += 0.5;
  }
  if (x_hi - x_lo < 1e-12) x_hi = x_lo + 1.0;

  auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return mt + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(width) +
         "\" height=\"" + detail::fmt(height) + "\" viewBox=\"0 0 " + detail::fmt(width) +
         " " + detail::fmt(height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + detail::fmt(ml) + "\" y=\"28\" font-family=\"sans-serif\" "
         "font-size=\"17\">" + title + "</text>\n";

  // Axes and ticks.
  out += "<g stroke=\"#333\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(mt + ph) + "\" x2=\"" +
         detail::fmt(ml + pw) + "\" y2=\"" + detail::fmt(mt + ph) + "\"/>\n";
  out += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(mt) + "\" x2=\"" +
         detail::fmt(ml) + "\" y2=\"" + detail::fmt(mt + ph) + "\"/>\n";
  out += "</g>\n";
  for (int i = 0; i <= 5; ++i) {
    double xv = x_lo + (x_hi - x_lo) * double(i) / 5.0;
    double yv = y_lo + (y_hi - y_lo) * double(i) / 5.0;
    out += "<text x=\"" + detail::fmt(px(xv)) + "\" y=\"" + detail::fmt(mt + ph + 22) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" +
           detail::fmt(xv) + "</text>\n";
    out += "<text x=\"" + detail::fmt(ml - 8) + "\" y=\"" + detail::fmt(py(yv) + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" +
           detail::fmt(yv) + "</text>\n";
    out += "<line x1=\"" + detail::fmt(ml) + "\" y1=\"" + detail::fmt(py(yv)) + "\" x2=\"" +
           detail::fmt(ml + pw) + "\" y2=\"" + detail::fmt(py(yv)) +
           "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
  }
  out += "<text x=\"" + detail::fmt(ml + pw / 2) + "\" y=\"" + detail::fmt(height - 14) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">episode t"
         "</text>\n";
  out += "<text x=\"22\" y=\"" + detail::fmt(mt + ph / 2) +
         "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 22 " + detail::fmt(mt + ph / 2) + ")\">" + y_label +
         "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sb = series[s];
    const char* color = palette[s % 6];
    // Confidence band: forward along the upper edge, back along the lower.
    std::string band = "M";
    bool first = true;
    for (std::size_t i = 0; i < sb.x.size(); ++i) {
      if (sb.x[i] < x_min_clip) continue;
      band += (first ? " " : " L ") + detail::fmt(px(sb.x[i])) + " " +
              detail::fmt(py(sb.mean[i] + sb.half[i]));
      first = false;
    }
    for (std::size_t i = sb.x.size(); i-- > 0;) {
      if (sb.x[i] < x_min_clip) continue;
      band += " L " + detail::fmt(px(sb.x[i])) + " " +
              detail::fmt(py(sb.mean[i] - sb.half[i]));
    }
    if (!first) {
      out += "<path d=\"" + band + " Z\" fill=\"" + color +
             "\" fill-opacity=\"0.15\" stroke=\"none\"/>\n";
    }
    std::string line = "M";
    first = true;
    for (std::size_t i = 0; i < sb.x.size(); ++i) {
      if (sb.x[i] < x_min_clip) continue;
      line += (first ? " " : " L ") + detail::fmt(px(sb.x[i])) + " " +
              detail::fmt(py(sb.mean[i]));
      first = false;
    }
    if (!first) {
      out += "<path d=\"" + line + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.6\"/>\n";
    }
    double ly = mt + 18 + 22 * double(s);
    out += "<line x1=\"" + detail::fmt(ml + pw + 14) + "\" y1=\"" + detail::fmt(ly - 4) +
           "\" x2=\"" + detail::fmt(ml + pw + 44) + "\" y2=\"" + detail::fmt(ly - 4) +
           "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + detail::fmt(ml + pw + 50) + "\" y=\"" + detail::fmt(ly) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + sb.label + "</text>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace pdp
