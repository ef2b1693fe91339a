#include "cslbounds/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace cslbounds {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string num(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

std::vector<IniSection> parse_ini(const std::string& text) {
  std::vector<IniSection> out;
  std::set<std::string> seenSections;
  std::istringstream in(text);
  std::string raw;
  int lineNo = 0;
  while (std::getline(in, raw)) {
    ++lineNo;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    // ';' separates lattice points, so it only comments out whole lines
    if (!line.empty() && line.front() == ';') continue;
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(fmt::format("line {}: unterminated section header", lineNo), lineNo);
      std::string name = trim(line.substr(1, line.size() - 2));
      const auto colon = name.find(':');
      if (colon == std::string::npos)
        name = lower(name);
      else
        name = lower(trim(name.substr(0, colon))) + ":" + trim(name.substr(colon + 1));
      if (name.empty()) throw ConfigError(fmt::format("line {}: empty section name", lineNo), lineNo);
      if (!seenSections.insert(name).second)
        throw ConfigError(fmt::format("line {}: duplicate section [{}]", lineNo, name), lineNo);
      out.push_back(IniSection{name, lineNo, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("line {}: expected 'key = value'", lineNo), lineNo);
    if (out.empty()) throw ConfigError(fmt::format("line {}: key outside of a section", lineNo), lineNo);
    IniEntry e{lower(trim(line.substr(0, eq))), trim(line.substr(eq + 1)), lineNo};
    if (e.key.empty()) throw ConfigError(fmt::format("line {}: empty key", lineNo), lineNo);
    for (const auto& prev : out.back().entries)
      if (prev.key == e.key)
        throw ConfigError(fmt::format("line {}: duplicate key '{}' (first at line {})", lineNo, e.key, prev.line),
                          lineNo, e.key);
    out.back().entries.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct UnitSuffix {
  const char* suffix;
  double scale;
};

enum class Unit { Length, Mass, Density, AngularRate, Rate, Temperature, Time, ForcePsd, TorquePsd, Damping, Coupling, None };

std::vector<UnitSuffix> suffixes(Unit u) {
  switch (u) {
    case Unit::Length: return {{"_m", 1.0}, {"_mm", 1e-3}, {"_um", 1e-6}, {"_nm", 1e-9}};
    case Unit::Mass: return {{"_kg", 1.0}, {"_g", 1e-3}};
    case Unit::Density: return {{"_kg_m3", 1.0}, {"_g_cm3", 1e3}};
    case Unit::AngularRate: return {{"_rad_s", 1.0}, {"_hz", 2.0 * kPi}, {"_khz", 2e3 * kPi}};
    case Unit::Rate: return {{"_per_s", 1.0}};
    case Unit::Temperature: return {{"_k", 1.0}, {"_mk", 1e-3}};
    case Unit::Time: return {{"_s", 1.0}, {"_ms", 1e-3}, {"_us", 1e-6}};
    case Unit::ForcePsd: return {{"_n2_s", 1.0}};
    case Unit::TorquePsd: return {{"_n2_m2_s", 1.0}};
    case Unit::Damping: return {{"_j_s", 1.0}};
    case Unit::Coupling: return {{"_rad_s_m", 1.0}};
    case Unit::None: return {{"", 1.0}};
  }
  return {};
}

class SectionReader {
 public:
  SectionReader(const IniSection& s, std::vector<UnitConversion>& conv) : sec_(s), conv_(conv) {}

  const IniSection& section() const { return sec_; }

  const IniEntry* find(const std::string& key) {
    for (const auto& e : sec_.entries)
      if (e.key == key) {
        used_.insert(key);
        return &e;
      }
    return nullptr;
  }

  bool has(const std::string& key) const {
    return std::any_of(sec_.entries.begin(), sec_.entries.end(), [&](const IniEntry& e) { return e.key == key; });
  }

  bool has_quantity(const std::string& base, Unit u) const {
    for (const auto& s : suffixes(u))
      if (has(base + s.suffix)) return true;
    return false;
  }

  [[noreturn]] void fail(const IniEntry& e, const std::string& what) const {
    throw ConfigError(fmt::format("line {}: [{}] {}: {}", e.line, sec_.name, e.key, what), e.line, e.key);
  }

  [[noreturn]] void fail_section(const std::string& field, const std::string& what) const {
    for (const auto& e : sec_.entries)
      if (!field.empty() && e.key == field) fail(e, what);
    throw ConfigError(fmt::format("line {}: [{}] {}{}", sec_.line, sec_.name, field.empty() ? "" : field + ": ", what),
                      sec_.line, field);
  }

  double parse_number(const IniEntry& e) const {
    const char* b = e.value.c_str();
    char* end = nullptr;
    const double v = std::strtod(b, &end);
    if (end == b || trim(end).size() != 0) fail(e, fmt::format("'{}' is not a number", e.value));
    if (!std::isfinite(v)) fail(e, "value must be finite");
    return v;
  }

  std::optional<double> quantity(const std::string& base, Unit u) {
    const IniEntry* found = nullptr;
    double scale = 1.0;
    const auto list = suffixes(u);
    for (const auto& s : list) {
      const IniEntry* e = find(base + s.suffix);
      if (!e) continue;
      if (found) fail(*e, fmt::format("conflicts with '{}' at line {}", found->key, found->line));
      found = e;
      scale = s.scale;
    }
    if (!found) return std::nullopt;
    const double v = parse_number(*found) * scale;
    const std::string canonical = base + list.front().suffix;
    if (found->key != canonical) conv_.push_back(UnitConversion{sec_.name, found->key, canonical, found->value, v});
    return v;
  }

  double require_quantity(const std::string& base, Unit u) {
    if (auto v = quantity(base, u)) return *v;
    fail_section(base + suffixes(u).front().suffix, "missing");
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const IniEntry* e = find(key);
    if (!e) return std::nullopt;
    std::int64_t iv = 0;
    const char* end = e->value.data() + e->value.size();
    const auto [ptr, ec] = std::from_chars(e->value.data(), end, iv);
    if (ec == std::errc() && ptr == end) return iv;
    const double v = parse_number(*e);
    if (v != std::floor(v) || std::abs(v) > 9e15) fail(*e, "must be an integer");
    return static_cast<std::int64_t>(v);
  }

  std::optional<std::string> text(const std::string& key) {
    const IniEntry* e = find(key);
    if (!e) return std::nullopt;
    return e->value;
  }

  std::string require_text(const std::string& key) {
    if (auto t = text(key)) return *t;
    fail_section(key, "missing");
  }

  std::optional<bool> boolean(const std::string& key) {
    const IniEntry* e = find(key);
    if (!e) return std::nullopt;
    const std::string v = lower(e->value);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail(*e, "expected true or false");
  }

  std::optional<Eigen::Vector3d> vector3(const std::string& key) {
    const IniEntry* e = find(key);
    if (!e) return std::nullopt;
    std::string s = e->value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream is(s);
    Eigen::Vector3d v;
    std::string extra;
    if (!(is >> v.x() >> v.y() >> v.z()) || (is >> extra)) fail(*e, "expected three numbers");
    if (!v.allFinite()) fail(*e, "components must be finite");
    return v;
  }

  // Unknown keys are errors, so typos do not silently fall back to defaults.
  void finish() const {
    for (const auto& e : sec_.entries)
      if (!used_.count(e.key)) fail(e, "unknown key");
  }

  const IniEntry* entry(const std::string& key) const {
    for (const auto& e : sec_.entries)
      if (e.key == key) return &e;
    return nullptr;
  }

 private:
  const IniSection& sec_;
  std::vector<UnitConversion>& conv_;
  std::set<std::string> used_;
};

double mass_or_density(SectionReader& r, double volume) {
  const bool hasMass = r.has_quantity("mass", Unit::Mass);
  const bool hasDensity = r.has_quantity("density", Unit::Density);
  if (hasMass && hasDensity) r.fail_section("mass_kg", "give either mass or density, not both");
  if (hasDensity) return r.require_quantity("density", Unit::Density) * volume;
  return r.require_quantity("mass", Unit::Mass);
}

Body read_body(SectionReader& r, const std::string& type) {
  if (type == "point") return make_point(r.require_quantity("mass", Unit::Mass));
  if (type == "sphere") {
    const double R = r.require_quantity("radius", Unit::Length);
    return make_sphere(mass_or_density(r, 4.0 / 3.0 * kPi * R * R * R), R);
  }
  if (type == "cuboid") {
    const double lx = r.require_quantity("lx", Unit::Length);
    const double ly = r.require_quantity("ly", Unit::Length);
    const double lz = r.require_quantity("lz", Unit::Length);
    return make_cuboid(mass_or_density(r, lx * ly * lz), lx, ly, lz);
  }
  if (type == "cylinder") {
    const double R = r.require_quantity("radius", Unit::Length);
    const double L = r.require_quantity("length", Unit::Length);
    const Eigen::Vector3d axis = r.vector3("axis").value_or(Eigen::Vector3d::UnitZ());
    return make_cylinder(mass_or_density(r, kPi * R * R * L), R, L, axis);
  }
  if (type == "multilayer") {
    const auto layers = r.integer("layers");
    if (!layers) r.fail_section("layers", "missing");
    const double d1 = r.require_quantity("d1", Unit::Length);
    const double d2 = r.require_quantity("d2", Unit::Length);
    const double rho1 = r.require_quantity("rho1", Unit::Density);
    const double rho2 = r.require_quantity("rho2", Unit::Density);
    const double lx = r.require_quantity("lx", Unit::Length);
    const double ly = r.require_quantity("ly", Unit::Length);
    const Eigen::Vector3d axis = r.vector3("stacking_axis").value_or(Eigen::Vector3d::UnitZ());
    if (*layers < 1 || *layers > 1000000) r.fail_section("layers", "must be between 1 and 1e6");
    return make_multilayer(static_cast<int>(*layers), d1, d2, rho1, rho2, lx, ly, axis);
  }
  if (type == "lattice") {
    const std::string key = "points_m_kg";
    const std::string list = r.require_text(key);
    std::vector<PointMass> pts;
    std::istringstream groups(list);
    std::string group;
    while (std::getline(groups, group, ';')) {
      if (trim(group).empty()) continue;
      std::replace(group.begin(), group.end(), ',', ' ');
      std::istringstream is(group);
      PointMass p;
      std::string extra;
      if (!(is >> p.position.x() >> p.position.y() >> p.position.z() >> p.mass) || (is >> extra))
        r.fail(*r.entry(key), fmt::format("bad point '{}': expected 'x y z mass'", trim(group)));
      pts.push_back(p);
    }
    return make_point_lattice(std::move(pts));
  }
  r.fail_section("type", fmt::format("unknown geometry type '{}'", type));
}

MassGeometry read_geometry(SectionReader& r) {
  const std::string type = lower(r.require_text("type"));
  try {
    if (type == "two_body") {
      const std::string unitType = lower(r.require_text("unit"));
      if (unitType == "two_body") r.fail_section("unit", "a two-body unit cannot itself be two-body");
      const double sep = r.require_quantity("separation", Unit::Length);
      Body unit = read_body(r, unitType);
      return make_two_body(unit, sep);
    }
    return to_geometry(read_body(r, type));
  } catch (const GeometryError& e) {
    r.fail_section("", e.what());
  }
}

std::optional<ColoredNoiseModel> read_noise(SectionReader& r) {
  const auto family = r.text("noise");
  const auto omegaC = r.quantity("omega_c", Unit::AngularRate);
  if (!family) {
    if (omegaC) r.fail_section("noise", "omega_c given without noise = lorentzian");
    return std::nullopt;
  }
  const std::string f = lower(*family);
  ColoredNoiseModel m;
  if (f == "white") {
    if (omegaC) r.fail_section("omega_c_rad_s", "not used by white noise");
    return std::nullopt;
  } else if (f == "lorentzian") {
    if (!omegaC) r.fail_section("omega_c_rad_s", "missing for lorentzian noise");
    m.family = NoiseFamily::LorentzianCutoff;
    m.omegaC = *omegaC;
  } else {
    r.fail(*r.entry("noise"), "expected white or lorentzian");
  }
  return m;
}

Channel parse_channel(SectionReader& r) {
  const std::string c = lower(r.require_text("channel"));
  if (c == "force") return Channel::ForceTranslational;
  if (c == "two_body") return Channel::ForceTwoBody;
  if (c == "torque") return Channel::Torque;
  if (c == "temperature") return Channel::TemperatureShift;
  r.fail(*r.entry("channel"), "expected force, two_body, torque or temperature");
}

template <typename F>
void checked(SectionReader& r, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    r.fail_section("", e.what());
  }
}

}  // namespace

std::vector<double> OmegaGrid::values() const {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double f = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
    g[i] = spacing == GridSpacing::Log ? omegaMin * std::pow(omegaMax / omegaMin, f)
                                       : omegaMin + (omegaMax - omegaMin) * f;
  }
  if (points > 1) {
    g.front() = omegaMin;
    g.back() = omegaMax;
  }
  return g;
}

std::vector<double> ScanConfig::values() const { return log_grid(rcMin, rcMax, pointsPerDecade); }

const MassGeometry& RunConfig::target_geometry() const {
  for (const auto& [name, g] : geometries)
    if (name == target) return g;
  throw ConfigError("no geometry named '" + target + "'");
}

RunConfig parse_config(const std::string& text) {
  const auto sections = parse_ini(text);
  RunConfig cfg;
  std::vector<std::pair<const IniSection*, std::string>> experimentSections;
  const IniSection* optomechSection = nullptr;
  const IniSection* simulationSection = nullptr;

  // Geometries first so that experiments may refer to any of them.
  for (const auto& sec : sections) {
    const auto colon = sec.name.find(':');
    const std::string kind = sec.name.substr(0, colon);
    if (kind != "geometry") continue;
    const std::string name = colon == std::string::npos ? "main" : sec.name.substr(colon + 1);
    for (const auto& [n, g] : cfg.geometries)
      if (n == name) throw ConfigError(fmt::format("line {}: duplicate geometry '{}'", sec.line, name), sec.line);
    SectionReader r(sec, cfg.conversions);
    MassGeometry g = read_geometry(r);
    r.finish();
    cfg.geometries.emplace_back(name, std::move(g));
  }

  for (const auto& sec : sections) {
    const auto colon = sec.name.find(':');
    const std::string kind = sec.name.substr(0, colon);
    const bool named = colon != std::string::npos;
    if (kind == "geometry") continue;
    if (kind == "experiment") {
      if (!named) throw ConfigError(fmt::format("line {}: experiment sections need a name", sec.line), sec.line);
      experimentSections.emplace_back(&sec, sec.name.substr(colon + 1));
      continue;
    }
    if (named) throw ConfigError(fmt::format("line {}: section [{}] takes no name", sec.line, sec.name), sec.line);
    SectionReader r(sec, cfg.conversions);
    if (kind == "collapse") {
      if (auto v = r.quantity("lambda", Unit::Rate)) cfg.collapse.lambda = *v;
      if (auto v = r.quantity("rc", Unit::Length)) cfg.collapse.rC = *v;
      cfg.collapse.colored = read_noise(r);
      checked(r, [&] { cfg.collapse.validate(); });
    } else if (kind == "optomech") {
      optomechSection = &sec;
      continue;
    } else if (kind == "grid") {
      if (auto v = r.quantity("omega_min", Unit::AngularRate)) cfg.grid.omegaMin = *v;
      if (auto v = r.quantity("omega_max", Unit::AngularRate)) cfg.grid.omegaMax = *v;
      if (auto v = r.integer("points")) {
        if (*v < 1 || *v > 10000000) r.fail(*r.entry("points"), "must be between 1 and 1e7");
        cfg.grid.points = static_cast<int>(*v);
      }
      if (auto s = r.text("spacing")) {
        const std::string v = lower(*s);
        if (v == "log") cfg.grid.spacing = GridSpacing::Log;
        else if (v == "linear") cfg.grid.spacing = GridSpacing::Linear;
        else r.fail(*r.entry("spacing"), "expected log or linear");
      }
      const double lo = cfg.grid.omegaMin, hi = cfg.grid.omegaMax;
      if (cfg.grid.spacing == GridSpacing::Log && !(lo > 0.0)) r.fail_section("omega_min_rad_s", "must be positive for a log grid");
      if (!(lo >= 0.0)) r.fail_section("omega_min_rad_s", "must be >= 0");
      if (cfg.grid.points > 1 ? !(hi > lo) : !(hi >= lo)) r.fail_section("omega_max_rad_s", "must exceed omega_min");
    } else if (kind == "quadrature") {
      if (auto v = r.quantity("rel_tol", Unit::None)) cfg.quadrature.relTol = *v;
      if (auto v = r.quantity("abs_tol", Unit::None)) cfg.quadrature.absTol = *v;
      if (auto v = r.integer("max_evals")) cfg.quadrature.maxEvals = *v;
      if (auto v = r.quantity("cutoff_factor", Unit::None)) cfg.quadrature.cutoffFactor = *v;
      checked(r, [&] { cfg.quadrature.validate(); });
    } else if (kind == "scan") {
      if (auto v = r.quantity("rc_min", Unit::Length)) cfg.scan.rcMin = *v;
      if (auto v = r.quantity("rc_max", Unit::Length)) cfg.scan.rcMax = *v;
      if (auto v = r.quantity("points_per_decade", Unit::None)) cfg.scan.pointsPerDecade = *v;
      if (auto v = r.boolean("combine")) cfg.scan.combine = *v;
      checked(r, [&] { (void)cfg.scan.values(); });
    } else if (kind == "simulation") {
      simulationSection = &sec;
      continue;
    } else {
      throw ConfigError(fmt::format("line {}: unknown section [{}]", sec.line, sec.name), sec.line);
    }
    r.finish();
  }

  auto geometryByName = [&](SectionReader& r, const std::string& key) -> std::pair<std::string, MassGeometry> {
    const auto name = r.text(key);
    if (!name) {
      if (cfg.geometries.empty()) r.fail_section(key, "no geometry section defined");
      return cfg.geometries.front();
    }
    for (const auto& ng : cfg.geometries)
      if (ng.first == *name) return ng;
    r.fail(*r.entry(key), fmt::format("no geometry named '{}'", *name));
  };

  if (optomechSection) {
    SectionReader r(*optomechSection, cfg.conversions);
    cfg.target = geometryByName(r, "geometry").first;
    OptomechConfig o;
    o.m = r.quantity("mass", Unit::Mass).value_or(total_mass(cfg.target_geometry()));
    o.omegaM = r.require_quantity("omega_m", Unit::AngularRate);
    o.gammaM = r.require_quantity("gamma_m", Unit::Rate);
    o.T = r.require_quantity("temperature", Unit::Temperature);
    if (auto v = r.quantity("kappa", Unit::Rate)) o.kappa = *v;
    if (auto v = r.quantity("delta", Unit::AngularRate)) o.Delta = *v;
    if (auto v = r.quantity("chi", Unit::Coupling)) o.chi = *v;
    if (auto v = r.quantity("alpha_sq", Unit::None)) o.alphaSq = *v;
    checked(r, [&] { o.validate(true); });
    cfg.optomech = o;
    r.finish();
  } else if (!cfg.geometries.empty()) {
    cfg.target = cfg.geometries.front().first;
  }

  if (simulationSection) {
    SectionReader r(*simulationSection, cfg.conversions);
    if (!cfg.optomech) r.fail_section("", "[simulation] requires an [optomech] section");
    SimConfig s;
    s.dt = r.require_quantity("dt", Unit::Time);
    if (auto v = r.integer("steps")) s.steps = *v;
    if (auto v = r.integer("trajectories")) s.trajectories = *v;
    if (const IniEntry* e = r.find("seed")) {
      const char* end = e->value.data() + e->value.size();
      const auto [ptr, ec] = std::from_chars(e->value.data(), end, s.seed);
      if (ec != std::errc() || ptr != end) r.fail(*e, "must be an unsigned 64-bit integer");
    }
    if (auto v = r.integer("segment_length")) s.segmentLength = *v;
    if (auto v = r.integer("stored_trajectories")) s.storedTrajectories = *v;
    if (auto v = r.integer("moment_stride")) s.momentStride = *v;
    checked(r, [&] { s.validate(*cfg.optomech); });
    cfg.simulation = s;
    r.finish();
  }

  for (const auto& [sec, name] : experimentSections) {
    SectionReader r(*sec, cfg.conversions);
    ExperimentRecord e;
    e.name = name;
    auto [gname, g] = geometryByName(r, "geometry");
    e.geometry = g;
    e.channel = parse_channel(r);
    switch (e.channel) {
      case Channel::ForceTranslational:
      case Channel::ForceTwoBody: e.budget = r.require_quantity("budget", Unit::ForcePsd); break;
      case Channel::Torque: e.budget = r.require_quantity("budget", Unit::TorquePsd); break;
      case Channel::TemperatureShift: {
        e.budget = r.require_quantity("budget", Unit::Temperature);
        e.dPhi = r.quantity("d_phi", Unit::Damping);
        if (!e.dPhi) {
          e.gamma = r.require_quantity("gamma", Unit::Rate);
          e.mass = r.quantity("mass", Unit::Mass).value_or(total_mass(e.geometry));
        }
        break;
      }
    }
    e.bandLo = r.require_quantity("band_lo", Unit::AngularRate);
    e.bandHi = r.require_quantity("band_hi", Unit::AngularRate);
    e.colored = read_noise(r);
    if (!r.has("noise")) e.colored = cfg.collapse.colored;
    checked(r, [&] { e.validate(); });
    r.finish();
    cfg.experiments.push_back(std::move(e));
    cfg.experimentGeometries.push_back(gname);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ":" + e.what(), e.line(), e.field());
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string vec(const Eigen::Vector3d& v) { return num(v.x()) + " " + num(v.y()) + " " + num(v.z()); }

void write_body(std::ostream& os, const Body& b, const char* typeKey) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Point>) {
          os << typeKey << " = point\nmass_kg = " << num(x.mass) << "\n";
        } else if constexpr (std::is_same_v<T, Sphere>) {
          os << typeKey << " = sphere\nmass_kg = " << num(x.mass) << "\nradius_m = " << num(x.radius) << "\n";
        } else if constexpr (std::is_same_v<T, Cuboid>) {
          os << typeKey << " = cuboid\nmass_kg = " << num(x.mass) << "\nlx_m = " << num(x.lx)
             << "\nly_m = " << num(x.ly) << "\nlz_m = " << num(x.lz) << "\n";
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          os << typeKey << " = cylinder\nmass_kg = " << num(x.mass) << "\nradius_m = " << num(x.radius)
             << "\nlength_m = " << num(x.length) << "\naxis = " << vec(x.axis) << "\n";
        } else if constexpr (std::is_same_v<T, Multilayer>) {
          os << typeKey << " = multilayer\nlayers = " << x.layerCount << "\nd1_m = " << num(x.d1)
             << "\nd2_m = " << num(x.d2) << "\nrho1_kg_m3 = " << num(x.rho1) << "\nrho2_kg_m3 = " << num(x.rho2)
             << "\nlx_m = " << num(x.lx) << "\nly_m = " << num(x.ly) << "\nstacking_axis = " << vec(x.stackingAxis)
             << "\n";
        } else if constexpr (std::is_same_v<T, PointLattice>) {
          os << typeKey << " = lattice\npoints_m_kg = ";
          for (std::size_t i = 0; i < x.points.size(); ++i)
            os << (i ? "; " : "") << vec(x.points[i].position) << " " << num(x.points[i].mass);
          os << "\n";
        }
      },
      b);
}

void write_noise(std::ostream& os, const std::optional<ColoredNoiseModel>& m, bool always = false) {
  if (!m && !always) return;
  if (!m || m->family == NoiseFamily::White)
    os << "noise = white\n";
  else
    os << "noise = lorentzian\nomega_c_rad_s = " << num(m->omegaC) << "\n";
}

}  // namespace

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  for (const auto& [name, g] : cfg.geometries) {
    os << "[geometry:" << name << "]\n";
    if (const auto* t = std::get_if<TwoBody>(&g)) {
      os << "type = two_body\nseparation_m = " << num(t->separation) << "\n";
      write_body(os, t->unit, "unit");
    } else {
      std::visit(
          [&](const auto& b) {
            if constexpr (!std::is_same_v<std::decay_t<decltype(b)>, TwoBody>) write_body(os, Body{b}, "type");
          },
          g);
    }
    os << "\n";
  }
  os << "[collapse]\nlambda_per_s = " << num(cfg.collapse.lambda) << "\nrc_m = " << num(cfg.collapse.rC) << "\n";
  write_noise(os, cfg.collapse.colored);
  os << "\n";
  if (cfg.optomech) {
    const auto& o = *cfg.optomech;
    os << "[optomech]\ngeometry = " << cfg.target << "\nmass_kg = " << num(o.m) << "\nomega_m_rad_s = " << num(o.omegaM)
       << "\ngamma_m_per_s = " << num(o.gammaM) << "\ntemperature_k = " << num(o.T) << "\nkappa_per_s = "
       << num(o.kappa) << "\ndelta_rad_s = " << num(o.Delta) << "\nchi_rad_s_m = " << num(o.chi)
       << "\nalpha_sq = " << num(o.alphaSq) << "\n\n";
  }
  os << "[grid]\nomega_min_rad_s = " << num(cfg.grid.omegaMin) << "\nomega_max_rad_s = " << num(cfg.grid.omegaMax)
     << "\npoints = " << cfg.grid.points << "\nspacing = " << (cfg.grid.spacing == GridSpacing::Log ? "log" : "linear")
     << "\n\n";
  os << "[quadrature]\nrel_tol = " << num(cfg.quadrature.relTol) << "\nabs_tol = " << num(cfg.quadrature.absTol)
     << "\nmax_evals = " << cfg.quadrature.maxEvals << "\ncutoff_factor = " << num(cfg.quadrature.cutoffFactor)
     << "\n\n";
  os << "[scan]\nrc_min_m = " << num(cfg.scan.rcMin) << "\nrc_max_m = " << num(cfg.scan.rcMax)
     << "\npoints_per_decade = " << num(cfg.scan.pointsPerDecade) << "\ncombine = " << (cfg.scan.combine ? "true" : "false")
     << "\n\n";
  for (std::size_t i = 0; i < cfg.experiments.size(); ++i) {
    const auto& e = cfg.experiments[i];
    os << "[experiment:" << e.name << "]\ngeometry = " << cfg.experimentGeometries.at(i)
       << "\nchannel = " << channel_name(e.channel) << "\n";
    switch (e.channel) {
      case Channel::ForceTranslational:
      case Channel::ForceTwoBody: os << "budget_n2_s = " << num(e.budget) << "\n"; break;
      case Channel::Torque: os << "budget_n2_m2_s = " << num(e.budget) << "\n"; break;
      case Channel::TemperatureShift:
        os << "budget_k = " << num(e.budget) << "\n";
        if (e.dPhi)
          os << "d_phi_j_s = " << num(*e.dPhi) << "\n";
        else
          os << "gamma_per_s = " << num(e.gamma) << "\nmass_kg = " << num(e.mass) << "\n";
        break;
    }
    os << "band_lo_rad_s = " << num(e.bandLo) << "\nband_hi_rad_s = " << num(e.bandHi) << "\n";
    // explicit, so a white experiment does not inherit colored collapse noise
    write_noise(os, e.colored, true);
    os << "\n";
  }
  if (cfg.simulation) {
    const auto& s = *cfg.simulation;
    os << "[simulation]\ndt_s = " << num(s.dt) << "\nsteps = " << s.steps << "\ntrajectories = " << s.trajectories
       << "\nseed = " << s.seed << "\nsegment_length = " << s.segmentLength
       << "\nstored_trajectories = " << s.storedTrajectories << "\nmoment_stride = " << s.momentStride << "\n";
  }
  return os.str();
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : serialize_config(cfg)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace cslbounds
