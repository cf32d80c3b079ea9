#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mfgprice/coefficients.hpp"
#include "mfgprice/simulate.hpp"

namespace mfgprice {

// Shortest round-trippable decimal for a double.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_coefficient_csv(std::ostream& os,
                                  const CoefficientPath& path) {
  os << "t,a0,a1_1,a1_2,a1_3,a2_1,a2_2,a2_3,a2_4,a2_5,a2_6\n";
  for (std::size_t k = 0; k < path.nodes(); ++k) {
    os << format_g17(path.grid()[k]);
    for (double v : path.node_values(k)) os << ',' << format_g17(v);
    os << '\n';
  }
}

inline void write_ensemble_csv(std::ostream& os, const ModelSpec& spec,
                               const PathEnsemble& ens) {
  os << "t,Q,price,Pi,mean_holdings,clearing_residual\n";
  for (std::size_t k = 0; k < ens.times.size(); ++k) {
    const double r =
        std::abs(ens.Q[k] + (ens.price[k] + ens.Pi[k]) / spec.c);
    os << format_g17(ens.times[k]) << ',' << format_g17(ens.Q[k]) << ','
       << format_g17(ens.price[k]) << ',' << format_g17(ens.Pi[k]) << ','
       << format_g17(ens.mean_holdings[k]) << ',' << format_g17(r) << '\n';
  }
}

// Minimal deterministic SVG line plots: fixed layout, fixed palette, numbers
// printed with two decimals so reruns are byte-identical.
struct PlotSeries {
  std::string label;
  std::span<const double> x;
  std::span<const double> y;
};

struct PlotPanel {
  std::string title;
  std::string y_label;
  std::vector<PlotSeries> series;
};

namespace detail {

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

inline double nice_step(double range) {
  if (!(range > 0.0)) return 1.0;
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  double nice = 10.0;
  if (frac <= 1.0)
    nice = 1.0;
  else if (frac <= 2.0)
    nice = 2.0;
  else if (frac <= 5.0)
    nice = 5.0;
  return nice * mag;
}

}  // namespace detail

inline void write_svg_plot(std::ostream& os, const std::string& title,
                           const std::vector<PlotPanel>& panels) {
  static const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                   "#9467bd", "#ff7f0e", "#8c564b",
                                   "#17becf", "#7f7f7f"};
  constexpr int kWidth = 880;
  constexpr int kPanelHeight = 250;
  constexpr int kTop = 44;
  constexpr int kLeftMargin = 64;
  constexpr int kRightMargin = 130;
  constexpr int kPanelPad = 36;

  const int height =
      kTop + static_cast<int>(panels.size()) * (kPanelHeight + kPanelPad);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << height << "\" viewBox=\"0 0 " << kWidth << ' '
     << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2
     << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"16\" font-weight=\"bold\">"
     << title << "</text>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const PlotPanel& panel = panels[pi];
    const int y0 = kTop + static_cast<int>(pi) * (kPanelHeight + kPanelPad);
    const int plot_w = kWidth - kLeftMargin - kRightMargin;
    const int plot_h = kPanelHeight - 40;

    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    bool first = true;
    for (const PlotSeries& s : panel.series) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (first) {
          xmin = xmax = s.x[i];
          ymin = ymax = s.y[i];
          first = false;
        }
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto sx = [&](double v) {
      return kLeftMargin + (v - xmin) / (xmax - xmin) * plot_w;
    };
    auto sy = [&](double v) {
      return y0 + plot_h - (v - ymin) / (ymax - ymin) * plot_h;
    };

    os << "<text x=\"" << kLeftMargin << "\" y=\"" << y0 - 8
       << "\" font-family=\"sans-serif\" font-size=\"13\" "
          "font-weight=\"bold\">"
       << panel.title << "</text>\n";
    os << "<rect x=\"" << kLeftMargin << "\" y=\"" << y0 << "\" width=\""
       << plot_w << "\" height=\"" << plot_h
       << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    const double xstep = detail::nice_step(xmax - xmin);
    for (double v = std::ceil(xmin / xstep) * xstep; v <= xmax + 1e-12;
         v += xstep) {
      const double px = sx(v);
      os << "<line x1=\"" << detail::fmt2(px) << "\" y1=\"" << y0 + plot_h
         << "\" x2=\"" << detail::fmt2(px) << "\" y2=\"" << y0 + plot_h + 5
         << "\" stroke=\"#333333\"/>\n";
      os << "<text x=\"" << detail::fmt2(px) << "\" y=\"" << y0 + plot_h + 18
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
            "font-size=\"11\">"
         << detail::tick_label(v) << "</text>\n";
    }
    const double ystep = detail::nice_step(ymax - ymin);
    for (double v = std::ceil(ymin / ystep) * ystep; v <= ymax + 1e-12;
         v += ystep) {
      const double py = sy(v);
      os << "<line x1=\"" << kLeftMargin - 5 << "\" y1=\"" << detail::fmt2(py)
         << "\" x2=\"" << kLeftMargin << "\" y2=\"" << detail::fmt2(py)
         << "\" stroke=\"#333333\"/>\n";
      os << "<line x1=\"" << kLeftMargin << "\" y1=\"" << detail::fmt2(py)
         << "\" x2=\"" << kLeftMargin + plot_w << "\" y2=\""
         << detail::fmt2(py)
         << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
      os << "<text x=\"" << kLeftMargin - 8 << "\" y=\""
         << detail::fmt2(py + 4)
         << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
            "font-size=\"11\">"
         << detail::tick_label(v) << "</text>\n";
    }
    os << "<text x=\"14\" y=\"" << y0 + plot_h / 2
       << "\" font-family=\"sans-serif\" font-size=\"12\" "
          "transform=\"rotate(-90 14 "
       << y0 + plot_h / 2 << ")\" text-anchor=\"middle\">" << panel.y_label
       << "</text>\n";

    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const PlotSeries& s = panel.series[si];
      const char* color = kPalette[si % (sizeof(kPalette) / sizeof(*kPalette))];
      // Long series are thinned to keep the file size bounded.
      const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 500);
      os << "<polyline fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"1.3\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); i += stride)
        os << detail::fmt2(sx(s.x[i])) << ',' << detail::fmt2(sy(s.y[i]))
           << ' ';
      if ((s.x.size() - 1) % stride != 0)
        os << detail::fmt2(sx(s.x.back())) << ','
           << detail::fmt2(sy(s.y.back())) << ' ';
      os << "\"/>\n";

      const int ly = y0 + 14 + static_cast<int>(si) * 16;
      os << "<line x1=\"" << kWidth - kRightMargin + 8 << "\" y1=\"" << ly
         << "\" x2=\"" << kWidth - kRightMargin + 28 << "\" y2=\"" << ly
         << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      os << "<text x=\"" << kWidth - kRightMargin + 33 << "\" y=\"" << ly + 4
         << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label
         << "</text>\n";
    }
    os << "<text x=\"" << kLeftMargin + plot_w / 2 << "\" y=\""
       << y0 + plot_h + 34
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">t</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace mfgprice
