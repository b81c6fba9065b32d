#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicopter/sim.hpp"

// Static SVG line plots. No interactivity, no external assets.

namespace bicopter::harness {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed{false};
};

struct PlotDef {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y{false};
  bool equal_aspect{false};
  std::vector<PlotSeries> series;
};

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

}  // namespace detail

inline std::string render_svg(const PlotDef& chart) {
  constexpr double W = 720, H = 440, L = 70, R = 150, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  const auto ty = [&](double v) {
    return chart.log_y ? std::log10(std::max(v, 1e-300)) : v;
  };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : chart.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (chart.log_y && !(s.y[i] > 0.0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  if (chart.equal_aspect) {
    const double sx = (xmax - xmin) / pw, sy = (ymax - ymin) / ph;
    if (sx > sy) {
      const double c = 0.5 * (ymin + ymax);
      ymin = c - 0.5 * sx * ph;
      ymax = c + 0.5 * sx * ph;
    } else {
      const double c = 0.5 * (xmin + xmax);
      xmin = c - 0.5 * sy * pw;
      xmax = c + 0.5 * sy * pw;
    }
  }
  const auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double y) { return T + ph - (ty(y) - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << detail::escape(chart.title) << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int i = 0; i <= 5; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 5.0;
    const double fy = ymin + (ymax - ymin) * i / 5.0;
    const double gx = L + pw * i / 5.0, gy = T + ph - ph * i / 5.0;
    os << "<line x1=\"" << gx << "\" y1=\"" << T << "\" x2=\"" << gx << "\" y2=\"" << T + ph
       << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << gy << "\" x2=\"" << L + pw << "\" y2=\"" << gy
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << gx << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">"
       << detail::num(fx) << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
       << detail::num(chart.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << detail::escape(chart.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << T + ph / 2 << ")\">" << detail::escape(chart.y_label) << "</text>\n";

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    os << "<polyline fill=\"none\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"1.5\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (chart.log_y && !(s.y[i] > 0.0)) continue;
      os << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i])) << ' ';
    }
    os << "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(k);
    os << "<line x1=\"" << L + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << L + pw + 34
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << detail::palette(k) << "\" stroke-width=\"2\""
       << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    os << "<text x=\"" << L + pw + 40 << "\" y=\"" << ly << "\">" << detail::escape(s.label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_svg(const std::string& path, const PlotDef& chart) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render_svg(chart);
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// Indices subsampled to at most max_points, always keeping the last.
inline std::vector<std::size_t> decimate(std::size_t n, std::size_t max_points = 2000) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t step = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
  for (std::size_t i = 0; i < n; i += step) idx.push_back(i);
  if (idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

/// The five standard plots of a run: xy path, states, inputs, estimates, V4.
inline std::vector<std::string> write_plot_bundle(const std::string& dir,
                                                  const std::vector<SimRecord>& recs) {
  const auto idx = decimate(recs.size());
  const auto series = [&](const std::string& label, auto get, bool dashed = false) {
    PlotSeries s;
    s.label = label;
    s.dashed = dashed;
    for (auto i : idx) {
      s.x.push_back(recs[i].t);
      s.y.push_back(get(recs[i]));
    }
    return s;
  };
  std::vector<std::string> written;
  const auto emit = [&](const std::string& file, const PlotDef& chart) {
    write_svg(dir + "/" + file, chart);
    written.push_back(file);
  };

  PlotDef xy{"Trajectory", "r1 [m]", "r2 [m]", false, true, {}};
  PlotSeries ref{"reference", {}, {}, true}, out{"vehicle", {}, {}, false};
  for (auto i : idx) {
    ref.x.push_back(recs[i].xi1.x);
    ref.y.push_back(recs[i].xi1.y);
    out.x.push_back(recs[i].plant.x1.x);
    out.y.push_back(recs[i].plant.x1.y);
  }
  xy.series = {ref, out};
  emit("trajectory_xy.svg", xy);

  PlotDef states{"States", "t [s]", "", false, false, {}};
  states.series = {series("r1 [m]", [](const SimRecord& r) { return r.plant.x1.x; }),
                   series("r1 ref", [](const SimRecord& r) { return r.xi1.x; }, true),
                   series("r2 [m]", [](const SimRecord& r) { return r.plant.x1.y; }),
                   series("r2 ref", [](const SimRecord& r) { return r.xi1.y; }, true),
                   series("phi [rad]", [](const SimRecord& r) { return r.plant.x3.y; }),
                   series("F [N]", [](const SimRecord& r) { return r.plant.x3.x; })};
  emit("states.svg", states);

  PlotDef inputs{"Inputs", "t [s]", "", false, false, {}};
  inputs.series = {series("F_ddot [N/s^2]", [](const SimRecord& r) { return r.u.x; }),
                   series("M [N m]", [](const SimRecord& r) { return r.u.y; })};
  emit("inputs.svg", inputs);

  PlotDef est{"Estimates", "t [s]", "", false, false, {}};
  est.series = {series("mass_hat", [](const SimRecord& r) { return r.est.mass; }),
                series("inertia_hat", [](const SimRecord& r) { return r.est.inertia; }),
                series("inv_mass_hat", [](const SimRecord& r) { return r.est.inv_mass; }),
                series("inv_mass_aux_hat", [](const SimRecord& r) { return r.est.inv_mass_aux; })};
  emit("estimates.svg", est);

  PlotDef lyap{"Lyapunov function V4", "t [s]", "V4", true, false, {}};
  lyap.series = {series("V4", [](const SimRecord& r) { return r.v4; })};
  emit("lyapunov.svg", lyap);
  return written;
}

}  // namespace bicopter::harness
