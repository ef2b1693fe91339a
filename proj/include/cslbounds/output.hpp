#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cslbounds/exclusion.hpp"
#include "cslbounds/optomech.hpp"

namespace cslbounds {

// Numbers are written with 17 significant digits so that reading a file back
// reproduces every double exactly.
std::string format_number(double v);

// rC_m,lambda_ub_per_s,error_est_per_s,status
void write_exclusion_csv(std::ostream& os, const ExclusionCurve& curve);
ExclusionCurve read_exclusion_csv(std::istream& is, const std::string& experiment = {});

// omega_rad_s, total and the three parts. oneSided doubles every value.
void write_spectrum_csv(std::ostream& os, const DisplacementSpectrum& s, bool oneSided);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;  // non-positive y values break the line
  std::string color = "#1f77b4";
  bool shadeAbove = false;   // fill between the curve and the top of the plot
};

struct LogLogPlot {
  std::string title;
  std::string xLabel, yLabel;
  std::vector<PlotSeries> series;
  int width = 720, height = 480;
};

// Self-contained SVG with decade ticks on both axes.
std::string render_loglog_svg(const LogLogPlot& plot);

}  // namespace cslbounds
