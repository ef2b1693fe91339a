#include "cslbounds/output.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace cslbounds {

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void write_exclusion_csv(std::ostream& os, const ExclusionCurve& curve) {
  curve.validate();
  os << "rC_m,lambda_ub_per_s,error_est_per_s,status\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    os << format_number(curve.rCs[i]) << ',' << format_number(curve.lambdaUB[i]) << ','
       << format_number(curve.errorEst[i]) << ',' << status_name(curve.status[i]) << '\n';
}

ExclusionCurve read_exclusion_csv(std::istream& is, const std::string& experiment) {
  std::string line;
  if (!std::getline(is, line) || line != "rC_m,lambda_ub_per_s,error_est_per_s,status")
    throw std::runtime_error("exclusion csv: unexpected header");
  ExclusionCurve c;
  c.experiment = experiment;
  int lineNo = 1;
  while (std::getline(is, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string f[4];
    for (auto& s : f)
      if (!std::getline(ls, s, ',')) throw std::runtime_error(fmt::format("exclusion csv: line {} is short", lineNo));
    try {
      c.rCs.push_back(std::stod(f[0]));
      c.lambdaUB.push_back(std::stod(f[1]));
      c.errorEst.push_back(std::stod(f[2]));
    } catch (const std::exception&) {
      throw std::runtime_error(fmt::format("exclusion csv: bad number on line {}", lineNo));
    }
    if (f[3] == "ok") c.status.push_back(PointStatus::Ok);
    else if (f[3] == "degenerate") c.status.push_back(PointStatus::Degenerate);
    else if (f[3] == "nonconverged") c.status.push_back(PointStatus::NonConverged);
    else throw std::runtime_error(fmt::format("exclusion csv: unknown status '{}' on line {}", f[3], lineNo));
  }
  c.validate();
  return c;
}

void write_spectrum_csv(std::ostream& os, const DisplacementSpectrum& s, bool oneSided) {
  const std::string side = oneSided ? "one_sided" : "double_sided";
  const double f = oneSided ? 2.0 : 1.0;
  os << fmt::format("omega_rad_s,S_x_{0}_m2_s,backaction_{0}_m2_s,thermal_{0}_m2_s,csl_{0}_m2_s\n", side);
  for (std::size_t i = 0; i < s.total.omegas.size(); ++i)
    os << format_number(s.total.omegas[i]) << ',' << format_number(f * s.total.values[i]) << ','
       << format_number(f * s.backaction[i]) << ',' << format_number(f * s.thermal[i]) << ','
       << format_number(f * s.csl[i]) << '\n';
}

namespace {

std::string escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (v > 0.0 && std::isfinite(v)) {
      lo = std::min(lo, std::log10(v));
      hi = std::max(hi, std::log10(v));
    }
  }
  // Whole decades; an empty or flat range gets one decade on each side.
  void snap() {
    if (!(lo <= hi)) lo = hi = 0.0;
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) {
      lo -= 1.0;
      hi += 1.0;
    }
  }
};

}  // namespace

std::string render_loglog_svg(const LogLogPlot& plot) {
  Range xr, yr;
  for (const auto& s : plot.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
      if (s.y[i] > 0.0) {
        xr.add(s.x[i]);
        yr.add(s.y[i]);
      }
  xr.snap();
  yr.snap();

  const double W = plot.width, H = plot.height;
  const double left = 90, right = 30, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto X = [&](double v) { return left + (std::log10(v) - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto Y = [&](double v) { return top + (yr.hi - std::log10(v)) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">)",
                   plot.width, plot.height, plot.width, plot.height)
    << "\n";
  o << fmt::format(R"(<rect x="0" y="0" width="{}" height="{}" fill="white"/>)", plot.width, plot.height) << "\n";
  o << R"(<defs><clipPath id="plotarea">)"
    << fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}"/>)", left, top, pw, ph)
    << "</clipPath></defs>\n";

  // Decade grid and tick labels; every other label when crowded.
  const int xDec = static_cast<int>(xr.hi - xr.lo), yDec = static_cast<int>(yr.hi - yr.lo);
  const int xStep = xDec > 10 ? 2 : 1, yStep = yDec > 10 ? 2 : 1;
  for (int d = 0; d <= xDec; ++d) {
    const double e = xr.lo + d;
    const double px = left + d * pw / xDec;
    o << fmt::format(R"(<line x1="{0:.2f}" y1="{1:.2f}" x2="{0:.2f}" y2="{2:.2f}" stroke="#dddddd"/>)", px, top, top + ph) << "\n";
    if (d % xStep == 0)
      o << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle">1e{}</text>)", px, top + ph + 18, e) << "\n";
  }
  for (int d = 0; d <= yDec; ++d) {
    const double e = yr.hi - d;
    const double py = top + d * ph / yDec;
    o << fmt::format(R"(<line x1="{0:.2f}" y1="{1:.2f}" x2="{2:.2f}" y2="{1:.2f}" stroke="#dddddd"/>)", left, py, left + pw) << "\n";
    if (d % yStep == 0)
      o << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="end">1e{}</text>)", left - 6, py + 4, e) << "\n";
  }
  o << fmt::format(R"(<rect x="{:.2f}" y="{:.2f}" width="{:.2f}" height="{:.2f}" fill="none" stroke="black"/>)", left, top, pw, ph)
    << "\n";

  for (const auto& s : plot.series) {
    // Split into runs of valid points.
    std::vector<std::vector<std::pair<double, double>>> runs(1);
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (s.y[i] > 0.0 && std::isfinite(s.y[i]) && s.x[i] > 0.0) {
        runs.back().emplace_back(X(s.x[i]), Y(s.y[i]));
      } else if (!runs.back().empty()) {
        runs.emplace_back();
      }
    }
    for (const auto& run : runs) {
      if (run.empty()) continue;
      if (s.shadeAbove && run.size() > 1) {
        o << R"~(<polygon clip-path="url(#plotarea)" fill=")~" << s.color << R"(" fill-opacity="0.25" stroke="none" points=")";
        o << fmt::format("{:.2f},{:.2f} ", run.front().first, top);
        for (const auto& [px, py] : run) o << fmt::format("{:.2f},{:.2f} ", px, py);
        o << fmt::format("{:.2f},{:.2f}", run.back().first, top) << "\"/>\n";
      }
      o << R"~(<polyline clip-path="url(#plotarea)" fill="none" stroke-width="1.8" stroke=")~" << s.color << R"(" points=")";
      for (std::size_t i = 0; i < run.size(); ++i)
        o << (i ? " " : "") << fmt::format("{:.2f},{:.2f}", run[i].first, run[i].second);
      o << "\"/>\n";
    }
  }

  // Legend
  double ly = top + 16;
  for (const auto& s : plot.series) {
    if (s.label.empty()) continue;
    o << fmt::format(R"(<line x1="{:.2f}" y1="{:.2f}" x2="{:.2f}" y2="{:.2f}" stroke="{}" stroke-width="2"/>)", left + pw - 170,
                     ly - 4, left + pw - 150, ly - 4, s.color)
      << fmt::format(R"(<text x="{:.2f}" y="{:.2f}">{}</text>)", left + pw - 144, ly, escape(s.label)) << "\n";
    ly += 16;
  }

  o << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle" font-size="14">{}</text>)", left + pw / 2, top - 14,
                   escape(plot.title))
    << "\n";
  o << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" text-anchor="middle">{}</text>)", left + pw / 2, H - 16, escape(plot.xLabel))
    << "\n";
  o << fmt::format(R"~(<text x="18" y="{:.2f}" text-anchor="middle" transform="rotate(-90 18 {:.2f})">{}</text>)~", top + ph / 2,
                   top + ph / 2, escape(plot.yLabel))
    << "\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace cslbounds
