#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cslbounds/csl_noise.hpp"
#include "cslbounds/exclusion.hpp"
#include "cslbounds/geometry.hpp"
#include "cslbounds/langevin.hpp"
#include "cslbounds/optomech.hpp"
#include "cslbounds/quadrature.hpp"

// Run configuration: a flat INI-style file with sections
//   [geometry] or [geometry:NAME], [collapse], [optomech], [grid],
//   [quadrature], [experiment:NAME], [scan], [simulation]
// Keys carry their unit as a suffix (radius_m, omega_m_rad_s, ...).
// docs/config.md lists every key.
namespace cslbounds {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, std::string field = {})
      : std::runtime_error(what), line_(line), field_(std::move(field)) {}
  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  int line_;
  std::string field_;
};

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;  // e.g. "geometry:cube"
  int line = 0;
  std::vector<IniEntry> entries;
};

// '#' starts a comment anywhere on a line, ';' only at the start of one.
// Keys are case-insensitive and stored in lower case; duplicate keys and
// sections are errors.
std::vector<IniSection> parse_ini(const std::string& text);

// A value given in a convenience unit, recorded for the run manifest.
struct UnitConversion {
  std::string section;
  std::string key;        // as written
  std::string canonical;  // SI key
  std::string raw;
  double si = 0.0;
};

enum class GridSpacing { Log, Linear };

struct OmegaGrid {
  double omegaMin = 1.0;   // rad/s
  double omegaMax = 1e4;   // rad/s
  int points = 200;
  GridSpacing spacing = GridSpacing::Log;

  std::vector<double> values() const;
};

struct ScanConfig {
  double rcMin = 1e-9;  // m
  double rcMax = 1e-3;  // m
  double pointsPerDecade = 50.0;
  bool combine = true;

  std::vector<double> values() const;
};

struct RunConfig {
  // Geometry sections in file order; the unnamed section is called "main".
  std::vector<std::pair<std::string, MassGeometry>> geometries;
  std::string target;  // geometry used by spectrum and simulate

  CollapseParams collapse;
  std::optional<OptomechConfig> optomech;
  OmegaGrid grid;
  QuadratureSpec quadrature;
  std::vector<ExperimentRecord> experiments;
  std::vector<std::string> experimentGeometries;  // geometry name per experiment
  ScanConfig scan;
  std::optional<SimConfig> simulation;

  std::vector<UnitConversion> conversions;

  const MassGeometry& target_geometry() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Canonical SI form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const RunConfig& cfg);

// FNV-1a of the canonical form.
std::uint64_t config_hash(const RunConfig& cfg);

}  // namespace cslbounds
