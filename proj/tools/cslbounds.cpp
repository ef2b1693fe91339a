// cslbounds: CSL noise spectra, exclusion scans, Langevin simulation and
// analytic point checks from a run configuration.
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "cslbounds/config.hpp"
#include "cslbounds/csl_noise.hpp"
#include "cslbounds/exclusion.hpp"
#include "cslbounds/langevin.hpp"
#include "cslbounds/optomech.hpp"
#include "cslbounds/output.hpp"
#include "cslbounds/parallel.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cslbounds;

namespace {

constexpr const char* kToolVersion = "0.1.0";

enum Exit { kOk = 0, kCheckFailed = 1, kConfig = 2, kNonConvergence = 3, kInstability = 4 };

struct Flags {
  std::string config;
  std::string out = ".";
  int threads = 0;
  bool svg = false;
  bool oneSided = false;
  double lambda = 1e-16;
  double rC = 1e-7;
  double hbarScale = 1.0;
};

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string safe_name(const std::string& s) {
  std::string o;
  for (char ch : s) o += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return o;
}

class Run {
 public:
  Run(std::string command, const Flags& f) : command_(std::move(command)), flags_(f), started_(utc_now()) {
    fs::create_directories(f.out);
  }

  void write(const std::string& name, const std::string& content, bool binary = false) {
    const fs::path p = fs::path(flags_.out) / name;
    std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << content;
    outputs_.push_back(name);
  }

  void record(const std::string& path) { outputs_.push_back(path); }

  json& extra() { return extra_; }

  void finish(const RunConfig* cfg, int threads, std::optional<std::uint64_t> seed = std::nullopt) {
    json m;
    m["tool"] = "cslbounds";
    m["toolVersion"] = kToolVersion;
    m["command"] = command_;
    m["config"] = flags_.config;
    if (cfg) m["configHash"] = fmt::format("{:016x}", config_hash(*cfg));
    m["seed"] = seed ? json(*seed) : json(nullptr);
    m["started"] = started_;
    m["finished"] = utc_now();
    m["threads"] = threads;
    m["oneSided"] = flags_.oneSided;
    json conv = json::array();
    if (cfg)
      for (const auto& c : cfg->conversions)
        conv.push_back({{"section", c.section}, {"key", c.key}, {"canonical", c.canonical}, {"raw", c.raw}, {"si", c.si}});
    m["unitConversions"] = conv;
    m["outputs"] = outputs_;
    for (auto& [k, v] : extra_.items()) m[k] = v;
    const fs::path p = fs::path(flags_.out) / ("manifest_" + command_ + ".json");
    std::ofstream os(p);
    os << m.dump(2) << "\n";
  }

 private:
  std::string command_;
  Flags flags_;
  std::string started_;
  std::vector<std::string> outputs_;
  json extra_ = json::object();
};

json quadrature_json(const QuadratureResult& r) {
  return {{"value", r.value}, {"error", r.error}, {"evaluations", r.evaluations}, {"converged", r.converged}};
}

// ---------------------------------------------------------------------------

int cmd_spectrum(const Flags& f) {
  const RunConfig cfg = load_config(f.config);
  if (!cfg.optomech) throw ConfigError(f.config + ": spectrum needs an [optomech] section");
  if (!(cfg.optomech->omegaM > 0.0)) throw ConfigError(f.config + ": spectrum needs omega_m > 0");
  const int threads = resolve_thread_count(f.threads);
  const MassGeometry& g = cfg.target_geometry();
  const auto omegas = cfg.grid.values();
  const DisplacementSpectrum s = displacement_dns(*cfg.optomech, cfg.collapse, g, omegas, cfg.quadrature);

  Run run("spectrum", f);
  std::ostringstream csv;
  write_spectrum_csv(csv, s, f.oneSided);
  run.write("spectrum.csv", csv.str());

  const double k = f.oneSided ? 2.0 : 1.0;
  auto scaled = [k](std::vector<double> v) {
    for (auto& x : v) x *= k;
    return v;
  };
  const double dT = cfg.optomech->gammaM > 0.0
                        ? csl_temperature_shift(s.forceSpectrum.value, cfg.optomech->m, cfg.optomech->gammaM)
                        : 0.0;
  json j;
  j["kind"] = "displacement";
  j["unit"] = unit_name(SpectrumKind::Displacement);
  j["sided"] = f.oneSided ? "one" : "double";
  j["geometry"] = cfg.target;
  j["geometryKind"] = kind_name(g);
  j["forceSpectrum_N2_s"] = quadrature_json(s.forceSpectrum);
  j["deltaT_csl_K"] = dT;
  j["omega_rad_s"] = s.total.omegas;
  j["total"] = scaled(s.total.values);
  j["backaction"] = scaled(s.backaction);
  j["thermal"] = scaled(s.thermal);
  j["csl"] = scaled(s.csl);
  run.write("spectrum.json", j.dump(2) + "\n");

  if (f.svg) {
    LogLogPlot p;
    p.title = fmt::format("Displacement spectrum ({})", cfg.target);
    p.xLabel = "omega (rad/s)";
    p.yLabel = fmt::format("S_x ({}, {}-sided)", unit_name(SpectrumKind::Displacement), f.oneSided ? "one" : "double");
    p.series.push_back({"total", omegas, scaled(s.total.values), "#000000"});
    p.series.push_back({"thermal", omegas, scaled(s.thermal), "#d62728"});
    p.series.push_back({"CSL", omegas, scaled(s.csl), "#1f77b4"});
    p.series.push_back({"backaction", omegas, scaled(s.backaction), "#2ca02c"});
    run.write("spectrum.svg", render_loglog_svg(p));
  }
  run.extra()["quadrature"] = quadrature_json(s.forceSpectrum);
  run.finish(&cfg, threads);
  fmt::print("S_FF = {:.6e} N^2 s (error {:.2e}), dT_CSL = {:.6e} K, {} grid points\n", s.forceSpectrum.value,
             s.forceSpectrum.error, dT, omegas.size());
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_exclusion(const Flags& f) {
  const RunConfig cfg = load_config(f.config);
  if (cfg.experiments.empty()) throw ConfigError(f.config + ": exclusion needs at least one [experiment:NAME] section");
  const int threads = resolve_thread_count(f.threads);
  const auto grid = cfg.scan.values();

  Run run("exclusion", f);
  std::vector<ExclusionCurve> curves;
  json summaries = json::array();
  bool nonconverged = false;
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  LogLogPlot plot;
  plot.title = "CSL exclusion (region above each curve is excluded)";
  plot.xLabel = "rC (m)";
  plot.yLabel = "lambda (1/s)";

  for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
    const auto& rec = cfg.experiments[i];
    ExclusionCurve c = exclusion_scan(rec, grid, cfg.quadrature, threads);
    std::ostringstream csv;
    write_exclusion_csv(csv, c);
    run.write("exclusion_" + safe_name(rec.name) + ".csv", csv.str());

    int ok = 0, degenerate = 0, nonconv = 0;
    double maxRel = 0.0, best = 0.0, bestRc = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
      switch (c.status[k]) {
        case PointStatus::Ok: ++ok; break;
        case PointStatus::Degenerate: ++degenerate; break;
        case PointStatus::NonConverged: ++nonconv; break;
      }
      if (c.status[k] == PointStatus::Degenerate) continue;
      maxRel = std::max(maxRel, c.errorEst[k] / c.lambdaUB[k]);
      if (best == 0.0 || c.lambdaUB[k] < best) {
        best = c.lambdaUB[k];
        bestRc = c.rCs[k];
      }
    }
    nonconverged = nonconverged || nonconv > 0;
    summaries.push_back({{"experiment", rec.name},
                         {"channel", channel_name(rec.channel)},
                         {"geometry", cfg.experimentGeometries[i]},
                         {"points", c.size()},
                         {"ok", ok},
                         {"degenerate", degenerate},
                         {"nonconverged", nonconv},
                         {"maxRelativeError", maxRel},
                         {"minLambdaUB_per_s", best > 0.0 ? json(best) : json(nullptr)},
                         {"rCAtMinimum_m", best > 0.0 ? json(bestRc) : json(nullptr)}});
    if (best > 0.0)
      fmt::print("{}: min lambda_ub = {:.6e} 1/s at rC = {:.6e} m ({} ok, {} degenerate, {} nonconverged)\n", rec.name,
                 best, bestRc, ok, degenerate, nonconv);
    else
      fmt::print("{}: no bound on this grid ({} degenerate points)\n", rec.name, degenerate);
    plot.series.push_back({rec.name, c.rCs, c.lambdaUB, palette[i % 6], true});
    curves.push_back(std::move(c));
  }
  if (curves.size() > 1 && cfg.scan.combine) {
    const ExclusionCurve all = combine_exclusions(curves);
    std::ostringstream csv;
    write_exclusion_csv(csv, all);
    run.write("exclusion_combined.csv", csv.str());
  }
  if (f.svg) run.write("exclusion.svg", render_loglog_svg(plot));
  run.extra()["quadrature"] = {{"relTol", cfg.quadrature.relTol}, {"experiments", summaries}};
  run.finish(&cfg, threads);
  if (nonconverged) {
    std::cerr << "error: quadrature did not converge at some grid points (status nonconverged in the CSV)\n";
    return kNonConvergence;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Flags& f) {
  const RunConfig cfg = load_config(f.config);
  if (!cfg.optomech || !cfg.simulation)
    throw ConfigError(f.config + ": simulate needs [optomech] and [simulation] sections");
  const int threads = resolve_thread_count(f.threads);
  const OptomechConfig& o = *cfg.optomech;
  const SimConfig& sim = *cfg.simulation;
  const MassGeometry& g = cfg.target_geometry();
  if (o.chi != 0.0 && o.alphaSq != 0.0)
    std::cerr << "note: optical terms are not simulated; the run uses the mechanical equations only\n";

  const LangevinResult r = simulate_langevin(o, cfg.collapse, g, sim, threads, cfg.quadrature);
  Run run("simulate", f);

  TrajectoryFileHeader h;
  h.seed = sim.seed;
  h.configHash = config_hash(cfg);
  h.dt = sim.dt;
  h.samples = static_cast<std::uint64_t>(sim.steps + 1);
  h.trajectories = r.stored.size();
  write_trajectory_file((fs::path(f.out) / "trajectories.bin").string(), h, r.stored);
  run.record("trajectories.bin");

  std::ostringstream mom;
  mom << "t_s,mean_x2_m2,mean_p2_kg2_m2_s-2\n";
  for (std::size_t i = 0; i < r.sampleTimes.size(); ++i)
    mom << format_number(r.sampleTimes[i]) << ',' << format_number(r.meanX2[i]) << ',' << format_number(r.meanP2[i]) << '\n';
  run.write("moments.csv", mom.str());

  json summary;
  summary["forceSpectrum_N2_s"] = r.forceSpectrum;
  summary["thermalForceSpectrum_N2_s"] = r.thermalForceSpectrum;
  summary["trajectories"] = sim.trajectories;

  const double k = f.oneSided ? 2.0 : 1.0;
  if (!r.spectrum.omegas.empty()) {
    // Mechanical-only reference for the same force spectrum.
    OptomechConfig mech = o;
    mech.chi = 0.0;
    mech.alphaSq = 0.0;
    CollapseParams white = cfg.collapse;
    white.colored.reset();
    const DisplacementSpectrum ref = displacement_dns_with_force(mech, white, r.forceSpectrum, r.spectrum.omegas);
    std::ostringstream csv;
    const std::string side = f.oneSided ? "one_sided" : "double_sided";
    csv << fmt::format("omega_rad_s,S_x_mc_{0}_m2_s,S_x_dns_{0}_m2_s\n", side);
    for (std::size_t i = 0; i < r.spectrum.omegas.size(); ++i)
      csv << format_number(r.spectrum.omegas[i]) << ',' << format_number(k * r.spectrum.values[i]) << ','
          << format_number(k * ref.total.values[i]) << '\n';
    run.write("sim_spectrum.csv", csv.str());
    if (f.svg) {
      LogLogPlot p;
      p.title = "Monte Carlo displacement spectrum";
      p.xLabel = "omega (rad/s)";
      p.yLabel = fmt::format("S_x (m^2 s, {}-sided)", f.oneSided ? "one" : "double");
      std::vector<double> mc, dns;
      for (std::size_t i = 0; i < r.spectrum.omegas.size(); ++i) {
        mc.push_back(k * r.spectrum.values[i]);
        dns.push_back(k * ref.total.values[i]);
      }
      p.series.push_back({"Monte Carlo", r.spectrum.omegas, mc, "#1f77b4"});
      p.series.push_back({"analytic", r.spectrum.omegas, dns, "#d62728"});
      run.write("sim_spectrum.svg", render_loglog_svg(p));
    }

    // Equipartition at T + dT_CSL.
    const double expected = (r.thermalForceSpectrum + r.forceSpectrum) / (2.0 * o.m * o.m * o.gammaM * o.omegaM * o.omegaM);
    const double z = r.meanX2Error > 0.0 ? (r.meanX2All - expected) / r.meanX2Error : 0.0;
    fmt::print("<x^2> = {:.6e} +- {:.2e} m^2, expected {:.6e} m^2 (z = {:.2f})\n", r.meanX2All, r.meanX2Error, expected, z);
    fmt::print("<E> = {:.6e} +- {:.2e} J, kB (T + dT_CSL) = {:.6e} J\n", r.meanEnergy, r.meanEnergyError,
               expected * o.m * o.omegaM * o.omegaM);
    summary["meanX2_m2"] = r.meanX2All;
    summary["meanX2Error_m2"] = r.meanX2Error;
    summary["meanX2Expected_m2"] = expected;
    summary["equipartitionZ"] = z;
    summary["welchSegments"] = r.segmentsAveraged;
  } else {
    // No stationary state: fit <x^2> ~ a t^n over the last decade.
    const double tEnd = r.sampleTimes.back();
    std::vector<double> t, y;
    for (std::size_t i = 0; i < r.sampleTimes.size(); ++i)
      if (r.sampleTimes[i] >= 0.1 * tEnd && r.meanX2[i] > 0.0) {
        t.push_back(r.sampleTimes[i]);
        y.push_back(r.meanX2[i]);
      }
    if (t.size() >= 2) {
      const PowerLawFit fit = fit_power_law(t, y);
      fmt::print("<x^2> ~ {:.6e} t^{:.4f} over t in [{:.3g}, {:.3g}] s\n", fit.prefactor, fit.exponent, t.front(), t.back());
      if (o.omegaM == 0.0 && o.gammaM == 0.0 && r.thermalForceSpectrum == 0.0)
        fmt::print("free particle: collapse term per axis S_FF t^3 / (3 m^2) = {:.6e} t^3\n",
                   r.forceSpectrum / (3.0 * o.m * o.m));
      summary["fitExponent"] = fit.exponent;
      summary["fitPrefactor"] = fit.prefactor;
    }
  }
  run.extra()["simulation"] = summary;
  run.finish(&cfg, threads, sim.seed);
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_pointcheck(const Flags& f) {
  PhysicalConstants c = kConstants;
  c.hbar *= f.hbarScale;
  c.validate();
  CollapseParams p;
  p.lambda = f.lambda;
  p.rC = f.rC;
  p.validate();
  const double lam = p.lambda / 1e-16;
  bool allPass = true;
  auto report = [&](const std::string& name, double value, double expected, bool pass, const std::string& detail) {
    allPass = allPass && pass;
    fmt::print("{} {}: {:.10e} ({})\n", pass ? "PASS" : "FAIL", name, value, detail);
    (void)expected;
  };
  auto close = [](double v, double e, double tol) {
    if (e == 0.0) return v == 0.0;
    return std::abs(v - e) <= tol * std::abs(e);
  };

  // Expected values use the reference constants, so a perturbed constant shows up as a failure.
  const PhysicalConstants& ref = kConstants;
  const double sExpected = ref.hbar * ref.hbar * p.lambda / (2.0 * p.rC * p.rC);
  const Point nucleon{c.m0};
  QuadratureSpec spec;
  spec.relTol = 1e-9;
  const double sQuad = csl_force_spectrum(nucleon, p, spec, Route::Spherical, c).value;
  report("point-mass S_FF, k-space quadrature", sQuad, sExpected, close(sQuad, sExpected, 1e-6),
         fmt::format("closed form {:.10e} N^2 s, tol 1e-6", sExpected));
  const double sClosed = point_force_spectrum(c.m0, p, c);
  report("point-mass S_FF, closed form", sClosed, sExpected, close(sClosed, sExpected, 1e-12),
         fmt::format("hbar^2 lambda / 2 rC^2 = {:.10e} N^2 s", sExpected));

  const double spreadExpected = ref.hbar * ref.hbar * p.lambda / (2.0 * ref.m0 * ref.m0 * p.rC * p.rC);
  const double spread = free_expansion_spread(p, 1.0, 0.0, c);
  report("free-expansion t^3 coefficient", spread, spreadExpected, close(spread, spreadExpected, 1e-3),
         fmt::format("expected {:.6e} m^2 at t = 1 s, tol 1e-3", spreadExpected));

  const double heat = heating_rate(nucleon, p, {}, c);
  const bool heatPass = lam == 0.0 ? heat == 0.0 : (heat >= 1e-15 * lam && heat <= 1e-13 * lam);
  report("hydrogen heating rate (K/year)", heat, 0.0, heatPass,
         lam == 0.0 ? std::string("expected 0") : fmt::format("window [{:.1e}, {:.1e}]", 1e-15 * lam, 1e-13 * lam));

  fmt::print("pointcheck: {}\n", allPass ? "PASS" : "FAIL");
  return allPass ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CSL noise spectra and collapse-parameter exclusion bounds"};
  app.require_subcommand(1, 1);
  Flags f;

  auto common = [&](CLI::App* sub, bool needConfig) {
    auto* opt = sub->add_option("--config", f.config, "Run configuration file");
    if (needConfig) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "Output directory")->capture_default_str();
    sub->add_option("--threads", f.threads, "Worker threads (default: CSLBOUNDS_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--svg", f.svg, "Also write an SVG plot");
    sub->add_flag("--one-sided", f.oneSided, "Write one-sided spectra (twice the double-sided values)");
  };
  auto* spectrum = app.add_subcommand("spectrum", "Displacement noise spectrum");
  common(spectrum, true);
  auto* exclusion = app.add_subcommand("exclusion", "Lambda upper bounds over an rC grid");
  common(exclusion, true);
  auto* simulate = app.add_subcommand("simulate", "Langevin Monte Carlo");
  common(simulate, true);
  auto* pointcheck = app.add_subcommand("pointcheck", "Analytic point-mass cross-checks");
  common(pointcheck, false);
  pointcheck->add_option("--lambda", f.lambda, "Collapse rate (1/s)")->capture_default_str()->check(CLI::NonNegativeNumber);
  pointcheck->add_option("--rc", f.rC, "Correlation length (m)")->capture_default_str()->check(CLI::PositiveNumber);
  pointcheck->add_option("--hbar-scale", f.hbarScale, "Multiply hbar by this factor")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*spectrum) return cmd_spectrum(f);
    if (*exclusion) return cmd_exclusion(f);
    if (*simulate) return cmd_simulate(f);
    if (*pointcheck) return cmd_pointcheck(f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return kNonConvergence;
  } catch (const UnstableStep& e) {
    std::cerr << "instability: " << e.what() << "\n";
    return kInstability;
  } catch (const NonPositiveDamping& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
