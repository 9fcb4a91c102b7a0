#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "hevsim/config.hpp"
#include "hevsim/errors.hpp"
#include "test_support.hpp"

using namespace hevsim;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream f(path);
  f << content;
  return path.string();
}

std::string default_config_path() { return test_support::config_dir() + "/default.cfg"; }

} // namespace

TEST_CASE("parser handles sections, labels, comments, and values") {
  std::string path = write_temp("hevsim_cfg_basic.cfg",
                                "# comment\n"
                                "[alpha]\n"
                                "a1 = 1.5  # trailing comment\n"
                                "name = hello\n"
                                "list = 1, 2, 3\n"
                                "table = 0:0.5, 10:1.5\n"
                                "\n"
                                "[scenario cold]\n"
                                "t_amb_c = -11\n");
  config::File f = config::parse_file(path);
  REQUIRE(f.sections.size() == 2);
  const auto& a = f.require("alpha");
  CHECK(f.number(a, "a1") == 1.5);
  CHECK(f.text(a, "name") == "hello");
  CHECK(f.number_list(a, "list") == std::vector<double>{1.0, 2.0, 3.0});
  auto table = f.pair_list(a, "table");
  CHECK(table.size() == 2);
  CHECK(table[1].first == 10.0);
  const auto* sc = f.find("scenario", "cold");
  REQUIRE(sc != nullptr);
  CHECK(f.number(*sc, "t_amb_c") == -11.0);
}

TEST_CASE("parser errors carry file and line") {
  std::string path = write_temp("hevsim_cfg_bad.cfg", "[a]\nkey_without_value\n");
  try {
    config::parse_file(path);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find(":2:") != std::string::npos);
  }

  std::string dup = write_temp("hevsim_cfg_dup.cfg", "[a]\nx = 1\nx = 2\n");
  CHECK_THROWS_AS(config::parse_file(dup), ConfigError);

  std::string orphan = write_temp("hevsim_cfg_orphan.cfg", "x = 1\n");
  CHECK_THROWS_AS(config::parse_file(orphan), ConfigError);

  std::string nan = write_temp("hevsim_cfg_nan.cfg", "[a]\nx = pear\n");
  config::File f = config::parse_file(nan);
  CHECK_THROWS_AS(f.number(f.require("a"), "x"), ConfigError);
}

TEST_CASE("corridor file loads and validates") {
  traffic::Corridor c = config::load_corridor(test_support::config_dir() + "/corridor_default.cfg");
  CHECK(c.length_m == 3540.0);
  CHECK(c.intersections.size() == 6);
  CHECK(c.intersections[0].position_m == 500.0);
  CHECK(c.intersections[5].position_m == 3420.0);
  for (std::size_t i = 1; i < c.intersections.size(); ++i)
    CHECK(c.intersections[i].position_m > c.intersections[i - 1].position_m);

  std::string bad = write_temp("hevsim_corr_bad.cfg",
                               "[corridor]\nlength_m = 1000\nspeed_limit_mps = 17.9\n"
                               "[intersection]\nposition_m = 500\ncycle_s = 60\n"
                               "green_offset_s = 0\ngreen_duration_s = 70\n" // > cycle
                               "initial_queue = 0\ndischarge_rate = 0.5\n");
  CHECK_THROWS_AS(config::load_corridor(bad), ConfigError);
}

TEST_CASE("shipped default config loads with all sections") {
  config::AppConfig app = config::load_app_config(default_config_path());
  CHECK(app.params.mpc.horizon_steps == 30);
  CHECK(app.params.mpc.dt_s == 1.0);
  CHECK(app.params.cp_jpkgk == 1005.0);
  CHECK(app.scenarios.count("eco_constant") == 1);
  CHECK(app.scenarios.count("long_stop_eco") == 1);
  CHECK(app.sweep.temps_c.size() == 6);
  CHECK(app.sweep.seeds == 3);
  CHECK_FALSE(app.calibration_scenarios.empty());
  const auto& sc = app.scenarios.at("eco_eco");
  CHECK(sc.driving == harness::DrivingKind::Eco);
  CHECK(sc.heating == harness::HeatingKind::Eco);
  CHECK(sc.ambient_c == -11.0);
  CHECK(sc.corridor.intersections.size() == 6);
  // scenario defaults per the test protocol
  CHECK(sc.cabin0_c >= 13.0);
  CHECK(sc.cabin0_c <= 15.0);
  CHECK(sc.coolant0_c == 85.0);
  // powertrain invariant chain
  CHECK(app.params.powertrain.t_cl_idle_on_c < app.params.powertrain.t_cl_idle_off_c);
  CHECK(app.params.powertrain.t_cl_idle_off_c < app.params.thermal.thermostat_open_c);
}

namespace {

// minimal app config around a given [beta] / [blower] / [alpha] body
std::string wrap_sections(const std::string& body) {
  return "[alpha]\na1 = 1\na2 = 0\na3 = 0\na4 = 0\n" + body +
         "[blower]\npoints = 10:0.02, 40:0.08, 70:0.15\n";
}

} // namespace

TEST_CASE("beta shape constraints are enforced at load") {
  // beta below one at 20 mph
  std::string low = write_temp(
      "hevsim_beta_low.cfg",
      wrap_sections("[beta]\npoints = 0:0.4, 8.94:0.9, 17.88:0.95\nscale = 1.0\n"));
  CHECK_THROWS_AS(config::load_app_config(low), ConfigError);

  // lowest value not at v = 0
  std::string not_lowest = write_temp(
      "hevsim_beta_m.cfg",
      wrap_sections("[beta]\npoints = 0:1.2, 8.94:1.1, 17.88:1.3\nscale = 1.0\n"));
  CHECK_THROWS_AS(config::load_app_config(not_lowest), ConfigError);

  // negative beta
  std::string neg = write_temp(
      "hevsim_beta_n.cfg",
      wrap_sections("[beta]\npoints = 0:-0.1, 8.94:1.1, 17.88:1.3\nscale = 1.0\n"));
  CHECK_THROWS_AS(config::load_app_config(neg), ConfigError);
}

TEST_CASE("blower map constraints are enforced at load") {
  std::string nonmono = write_temp(
      "hevsim_blower_nm.cfg",
      "[alpha]\na1 = 1\na2 = 0\na3 = 0\na4 = 0\n"
      "[beta]\npoints = 0:0.5, 8.94:1.1\nscale = 1.0\n"
      "[blower]\npoints = 10:0.08, 40:0.02, 70:0.15\n");
  CHECK_THROWS_AS(config::load_app_config(nonmono), ConfigError);

  std::string short_span = write_temp(
      "hevsim_blower_ss.cfg",
      "[alpha]\na1 = 1\na2 = 0\na3 = 0\na4 = 0\n"
      "[beta]\npoints = 0:0.5, 8.94:1.1\nscale = 1.0\n"
      "[blower]\npoints = 20:0.02, 60:0.15\n");
  CHECK_THROWS_AS(config::load_app_config(short_span), ConfigError);
}

TEST_CASE("alpha monotonicity is enforced at load") {
  // strongly negative coolant coupling violates the box monotonicity
  std::string bad = write_temp("hevsim_alpha_bad.cfg",
                               "[alpha]\na1 = 1\na2 = -0.5\na3 = 0\na4 = 0\n"
                               "[beta]\npoints = 0:0.5, 8.94:1.1\nscale = 1.0\n"
                               "[blower]\npoints = 10:0.02, 40:0.08, 70:0.15\n");
  CHECK_THROWS_AS(config::load_app_config(bad), ConfigError);
}

TEST_CASE("engine heat fraction outside [0,1] is rejected") {
  std::string bad = write_temp("hevsim_frac_bad.cfg",
                               "[thermal]\nengine_heat_fraction = 1.2\n"
                               "[alpha]\na1 = 1\na2 = 0\na3 = 0\na4 = 0\n"
                               "[beta]\npoints = 0:0.5, 8.94:1.1\nscale = 1.0\n"
                               "[blower]\npoints = 10:0.02, 40:0.08, 70:0.15\n");
  CHECK_THROWS_AS(config::load_app_config(bad), ConfigError);
}

TEST_CASE("scenario referencing a missing corridor fails with diagnostics") {
  std::string bad = write_temp("hevsim_sc_bad.cfg",
                               "[alpha]\na1 = 1\na2 = 0\na3 = 0\na4 = 0\n"
                               "[beta]\npoints = 0:0.5, 8.94:1.1\nscale = 1.0\n"
                               "[blower]\npoints = 10:0.02, 40:0.08, 70:0.15\n"
                               "[scenario x]\nt_amb_c = -5\ncorridor = does_not_exist.cfg\n");
  CHECK_THROWS_AS(config::load_app_config(bad), ConfigError);
}
