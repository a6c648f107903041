// Copyright 2026 The gridgame Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Trajectory CSV and SVG line charts.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gridgame/dynamics.hpp"

namespace gridgame {

inline constexpr const char* kTrajectoryHeader =
    "step,bus,p_gen_mw,theta_rad,step_change_mw";

inline std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  std::string s(buf);
  // Avoid "-0.000000".
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

// One row per tracked bus per step.
inline void WriteTrajectoryCsv(std::ostream& out, const Trajectory& traj,
                               double base_mva) {
  out << kTrajectoryHeader << '\n';
  for (const StepRecord& rec : traj.steps) {
    for (std::size_t k = 0; k < traj.buses.size(); ++k) {
      out << rec.step << ',' << traj.buses[k].value << ','
          << Fixed(rec.p_gen[k] * base_mva) << ',' << Fixed(rec.theta[k]) << ','
          << Fixed(rec.step_change * base_mva) << '\n';
    }
  }
}

struct ChartSeries {
  std::string name;
  std::vector<double> values;  // y per step, x is the index
};

namespace internal {

inline std::string XmlEscape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline double NiceStep(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.5 ? 2.0 : f < 7.5 ? 5.0 : 10.0) * mag;
}

}  // namespace internal

// A plain SVG 1.1 line chart: axes, ticks, one polyline per series, legend.
inline std::string SvgLineChart(const std::string& title, const std::string& x_label,
                                const std::string& y_label,
                                const std::vector<ChartSeries>& series) {
  constexpr double kW = 720, kH = 440, kLeft = 80, kRight = 150, kTop = 40,
                   kBottom = 60;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::size_t n = 0;
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const ChartSeries& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
  }
  if (hi - lo < 1e-12) {
    const double pad = std::max(1e-3, std::abs(hi) * 0.1);
    lo -= pad;
    hi += pad;
  }
  const double ystep = internal::NiceStep(hi - lo);
  lo = std::floor(lo / ystep) * ystep;
  hi = std::ceil(hi / ystep) * ystep;
  const double xmax = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double x) { return kLeft + pw * x / xmax; };
  auto py = [&](double y) { return kTop + ph * (1.0 - (y - lo) / (hi - lo)); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kW
    << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"16\">" << internal::XmlEscape(title)
    << "</text>\n";
  o << "<g font-family=\"sans-serif\" font-size=\"11\" stroke-width=\"1\">\n";
  for (double y = lo; y <= hi + 1e-9 * ystep; y += ystep) {
    o << "<line x1=\"" << kLeft << "\" y1=\"" << Fixed(py(y), 2) << "\" x2=\""
      << kLeft + pw << "\" y2=\"" << Fixed(py(y), 2) << "\" stroke=\"#dddddd\"/>\n"
      << "<text x=\"" << kLeft - 6 << "\" y=\"" << Fixed(py(y) + 4, 2)
      << "\" text-anchor=\"end\">" << Fixed(y, ystep < 0.01 ? 4 : 2) << "</text>\n";
  }
  const double xstep = std::max(1.0, std::round(internal::NiceStep(xmax)));
  for (double x = 0; x <= xmax + 1e-9; x += xstep) {
    o << "<text x=\"" << Fixed(px(x), 2) << "\" y=\"" << kTop + ph + 16
      << "\" text-anchor=\"middle\">" << static_cast<long>(x) << "</text>\n";
  }
  o << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
    << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
    << "\" y2=\"" << kTop + ph << "\" stroke=\"black\"/>\n"
    << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 18
    << "\" text-anchor=\"middle\" font-size=\"13\">" << internal::XmlEscape(x_label)
    << "</text>\n"
    << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" "
    << "font-size=\"13\" transform=\"rotate(-90 18 " << kTop + ph / 2 << ")\">"
    << internal::XmlEscape(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % (sizeof(kColors) / sizeof(kColors[0]))];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" "
      << "points=\"";
    for (std::size_t x = 0; x < series[k].values.size(); ++x) {
      o << (x ? " " : "") << Fixed(px(static_cast<double>(x)), 2) << ','
        << Fixed(py(series[k].values[x]), 2);
    }
    o << "\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\""
      << kLeft + pw + 36 << "\" y2=\"" << ly << "\" stroke=\"" << color
      << "\" stroke-width=\"2\"/>\n"
      << "<text x=\"" << kLeft + pw + 42 << "\" y=\"" << ly + 4 << "\">"
      << internal::XmlEscape(series[k].name) << "</text>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

inline std::vector<ChartSeries> GenerationSeries(const Trajectory& traj,
                                                 double base_mva) {
  std::vector<ChartSeries> out;
  for (std::size_t k = 0; k < traj.buses.size(); ++k) {
    ChartSeries s{"bus " + ToString(traj.buses[k]), {}};
    for (const StepRecord& rec : traj.steps) s.values.push_back(rec.p_gen[k] * base_mva);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<ChartSeries> AngleSeries(const Trajectory& traj) {
  std::vector<ChartSeries> out;
  for (std::size_t k = 0; k < traj.buses.size(); ++k) {
    ChartSeries s{"bus " + ToString(traj.buses[k]), {}};
    for (const StepRecord& rec : traj.steps) s.values.push_back(rec.theta[k]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace gridgame
