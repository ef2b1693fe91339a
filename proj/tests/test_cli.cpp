#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cslbounds/langevin.hpp"
#include "cslbounds/output.hpp"

namespace fs = std::filesystem;
using namespace cslbounds;

namespace {

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(fs::temp_directory_path() / ("cslbounds_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string file(const std::string& name, const std::string& text) const {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const std::string& log = "/dev/null") {
  const std::string cmd = std::string(CSLBOUNDS_CLI) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

const char* kSmall = R"([geometry]
type = cuboid
mass_kg = 1e-12
lx_um = 5
ly_um = 5
lz_um = 1

[collapse]
lambda_per_s = 1e-8
rc_m = 1e-7

[optomech]
omega_m_hz = 1000
gamma_m_per_s = 1
temperature_k = 1
kappa_per_s = 1e6

[grid]
omega_min_hz = 500
omega_max_hz = 2000
points = 20

[scan]
rc_min_m = 1e-8
rc_max_m = 1e-5
points_per_decade = 4

[experiment:force]
channel = force
budget_n2_s = 1e-40
band_lo_hz = 900
band_hi_hz = 1100

[experiment:heat]
channel = temperature
budget_mk = 1
gamma_per_s = 1
band_lo_hz = 900
band_hi_hz = 1100

[simulation]
dt_us = 10
steps = 4095
trajectories = 4
seed = 99
segment_length = 1024
stored_trajectories = 2
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("pointcheck exit codes") {
  Workdir w("pointcheck");
  CHECK(run("pointcheck --out " + w.path("a")) == 0);
  CHECK(run("pointcheck --out " + w.path("b") + " --hbar-scale 1.1") == 1);
  CHECK(run("pointcheck --out " + w.path("c") + " --lambda 0") == 0);
  const std::string log = w.path("log.txt");
  run("pointcheck --out " + w.path("d"), log);
  const std::string out = slurp(log);
  CHECK(out.find("pointcheck: PASS") != std::string::npos);
  CHECK(out.find("FAIL") == std::string::npos);
}

TEST_CASE("usage errors") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("exclusion --config /nonexistent/file.ini") == 2);
}

TEST_CASE("configuration errors exit with 2 and name the line") {
  Workdir w("badcfg");
  const std::string cfg = w.file("bad.ini", "[collapse]\nlambda_per_s = 1e-16\nrc_m = 1e-7\nwibble_m = 3\n");
  const std::string log = w.path("log.txt");
  CHECK(run("exclusion --config " + cfg + " --out " + w.path("o"), log) == 2);
  const std::string out = slurp(log);
  CHECK(out.find("line 4") != std::string::npos);
  CHECK(out.find("wibble_m") != std::string::npos);
}

TEST_CASE("exclusion outputs, manifest and thread independence") {
  Workdir w("exclusion");
  const std::string cfg = w.file("small.ini", kSmall);
  REQUIRE(run("exclusion --config " + cfg + " --out " + w.path("t1") + " --threads 1 --svg") == 0);
  REQUIRE(run("exclusion --config " + cfg + " --out " + w.path("t3") + " --threads 3") == 0);
  for (const char* f : {"exclusion_force.csv", "exclusion_heat.csv", "exclusion_combined.csv"}) {
    CAPTURE(f);
    CHECK(slurp(w.path("t1/") + f) == slurp(w.path("t3/") + f));
  }
  CHECK(fs::exists(w.path("t1/exclusion.svg")));
  std::ifstream is(w.path("t1/exclusion_combined.csv"));
  const auto curve = read_exclusion_csv(is);
  CHECK(curve.size() == 13);

  const auto m = nlohmann::json::parse(slurp(w.path("t1/manifest_exclusion.json")));
  CHECK(m["tool"] == "cslbounds");
  CHECK(m["configHash"].get<std::string>().size() == 16);
  CHECK(m["threads"] == 1);
  CHECK(m["outputs"].size() >= 3);
  bool sawUnit = false;
  for (const auto& u : m["unitConversions"])
    if (u["key"] == "lx_um") sawUnit = true;
  CHECK(sawUnit);
}

TEST_CASE("single-point grid round trips through csv") {
  Workdir w("single");
  const std::string cfg = w.file("one.ini", std::string(kSmall) + "");
  std::string text = kSmall;
  text.replace(text.find("rc_max_m = 1e-5"), 15, "rc_max_m = 1e-8");
  const std::string one = w.file("one.ini", text);
  REQUIRE(run("exclusion --config " + one + " --out " + w.path("o")) == 0);
  std::ifstream is(w.path("o/exclusion_force.csv"));
  const auto c = read_exclusion_csv(is);
  REQUIRE(c.size() == 1);
  CHECK(c.rCs[0] == 1e-8);
  CHECK(c.status[0] == PointStatus::Ok);
}

TEST_CASE("non-convergence exits with 3 after writing the curve") {
  Workdir w("nonconv");
  std::string text = kSmall;
  text += "\n[quadrature]\nrel_tol = 1e-14\nmax_evals = 30\n";
  text.replace(text.find("type = cuboid\nmass_kg = 1e-12\nlx_um = 5\nly_um = 5\nlz_um = 1"), 59,
               "type = cylinder\nmass_kg = 1e-12\nradius_um = 1\nlength_um = 2");
  text.replace(text.find("rc_min_m = 1e-8"), 15, "rc_min_m = 1e-4");
  text.replace(text.find("rc_max_m = 1e-5"), 15, "rc_max_m = 1e-3");
  const std::string cfg = w.file("nc.ini", text);
  CHECK(run("exclusion --config " + cfg + " --out " + w.path("o")) == 3);
  std::ifstream is(w.path("o/exclusion_force.csv"));
  const auto c = read_exclusion_csv(is);
  CHECK(c.status[0] == PointStatus::NonConverged);
}

TEST_CASE("spectrum command") {
  Workdir w("spectrum");
  const std::string cfg = w.file("small.ini", kSmall);
  REQUIRE(run("spectrum --config " + cfg + " --out " + w.path("o") + " --one-sided --svg") == 0);
  const std::string csv = slurp(w.path("o/spectrum.csv"));
  CHECK(csv.rfind("omega_rad_s,S_x_one_sided_m2_s", 0) == 0);
  const auto j = nlohmann::json::parse(slurp(w.path("o/spectrum.json")));
  CHECK(j["omega_rad_s"].size() == 20);
  CHECK(fs::exists(w.path("o/spectrum.svg")));

  std::string unstable = kSmall;
  unstable.replace(unstable.find("kappa_per_s = 1e6"), 17,
                   "kappa_per_s = 1e4\ndelta_rad_s = -1e4\nchi_rad_s_m = 1e12\nalpha_sq = 1e7");
  CHECK(run("spectrum --config " + w.file("ad.ini", unstable) + " --out " + w.path("p")) == 2);
}

TEST_CASE("simulate command") {
  Workdir w("simulate");
  const std::string cfg = w.file("small.ini", kSmall);
  REQUIRE(run("simulate --config " + cfg + " --out " + w.path("o") + " --threads 2") == 0);
  const auto f = read_trajectory_file(w.path("o/trajectories.bin"));
  CHECK(f.header.seed == 99);
  CHECK(f.trajectories.size() == 2);
  CHECK(f.header.samples == 4096);
  CHECK(fs::exists(w.path("o/moments.csv")));
  CHECK(fs::exists(w.path("o/sim_spectrum.csv")));
  const auto m = nlohmann::json::parse(slurp(w.path("o/manifest_simulate.json")));
  CHECK(m["seed"] == 99);

  REQUIRE(run("simulate --config " + cfg + " --out " + w.path("p") + " --threads 1") == 0);
  CHECK(slurp(w.path("o/trajectories.bin")) == slurp(w.path("p/trajectories.bin")));

  std::string bad = kSmall;
  bad.replace(bad.find("gamma_m_per_s = 1\n"), 18, "gamma_m_per_s = 1e6\n");
  CHECK(run("simulate --config " + w.file("bad.ini", bad) + " --out " + w.path("q")) == 4);
}

}
