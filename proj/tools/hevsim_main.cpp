#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hevsim/config.hpp"
#include "hevsim/errors.hpp"
#include "hevsim/harness.hpp"

namespace {

using namespace hevsim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDomain = 2;

// `--out -` streams data to stdout; anything else is a file path.
void emit(const std::string& out, const std::string& payload) {
  if (out == "-") {
    std::cout << payload;
    return;
  }
  std::filesystem::path p(out);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw ConfigError("cannot write output file: " + out);
  f << payload;
}

harness::Scenario scenario_or_fail(const config::AppConfig& app, const std::string& name) {
  auto it = app.scenarios.find(name);
  if (it != app.scenarios.end()) return it->second;
  std::string names;
  for (const auto& n : app.scenario_order) names += (names.empty() ? "" : ", ") + n;
  throw ConfigError("unknown scenario '" + name + "'; available: " + names);
}

std::vector<hvac::AlphaSample> load_alpha_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open samples file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "T_sp_C,T_cl_C,T_ain_C")
    throw SchemaError(path + ": expected header 'T_sp_C,T_cl_C,T_ain_C'");
  std::vector<hvac::AlphaSample> samples;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
      throw SchemaError(path + ":" + std::to_string(lineno) + ": short row");
    try {
      samples.push_back({std::stod(a), std::stod(b), std::stod(c)});
    } catch (const std::exception&) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  return samples;
}

int run(int argc, char** argv) {
  CLI::App cli{"Desk-scale eco-driving / eco-heating simulator for a power-split HEV"};
  cli.require_subcommand(1);
  cli.fallthrough(); // global flags may appear after the subcommand

  std::string config_path = "configs/default.cfg";
  std::string out = "";
  int jobs = 1;
  std::int64_t seed_override = -1;
  cli.add_option("--config", config_path, "path to the main config file")->capture_default_str();
  cli.add_option("--out", out, "output file/dir ('-' for stdout)");
  cli.add_option("--seed", seed_override, "override scenario seed");
  cli.add_option("--jobs", jobs, "parallel scenario runs for compare --sweep")
      ->capture_default_str();

  auto* plan = cli.add_subcommand("plan", "emit a planned speed profile as CSV");
  std::string driving = "eco";
  std::string plan_scenario = "";
  plan->add_option("--driving", driving, "eco|normal")->capture_default_str();
  plan->add_option("--scenario", plan_scenario, "scenario whose corridor to plan over");

  auto* simulate = cli.add_subcommand("simulate", "run one scenario closed loop");
  std::string sim_scenario;
  simulate->add_option("--scenario", sim_scenario, "scenario name")->required();

  auto* cmp = cli.add_subcommand("compare", "paired constant/eco heating comparison table");
  bool sweep = false;
  cmp->add_flag("--sweep", sweep, "run the configured ambient sweep");

  auto* calib = cli.add_subcommand("calibrate-beta", "match eco DAHE to constant heating");

  auto* replay = cli.add_subcommand("replay", "energy report from a telemetry log");
  std::string log_path;
  replay->add_option("--log", log_path, "replay CSV path")->required();

  auto* fit = cli.add_subcommand("fit-alpha", "fit the vent-air model to samples");
  std::string samples_path;
  fit->add_option("--samples", samples_path, "CSV with header T_sp_C,T_cl_C,T_ain_C")->required();

  CLI11_PARSE(cli, argc, argv);

  config::AppConfig app = config::load_app_config(config_path);
  if (out.empty()) out = app.out_dir;

  if (*plan) {
    harness::Scenario sc;
    if (!plan_scenario.empty()) {
      sc = scenario_or_fail(app, plan_scenario);
    } else if (!app.scenario_order.empty()) {
      sc = app.scenarios.at(app.scenario_order.front());
    } else {
      throw ConfigError("config defines no scenarios to plan over");
    }
    traffic::SpeedProfile p;
    if (driving == "eco")
      p = traffic::plan_eco_trajectory(sc.corridor, 0.0, 0.0, app.params.limits);
    else if (driving == "normal")
      p = traffic::plan_normal_trajectory(sc.corridor, 0.0, 0.0, app.params.limits);
    else
      throw ConfigError("--driving must be 'eco' or 'normal'");
    std::ostringstream os;
    harness::write_profile_csv(os, p);
    emit(out == app.out_dir ? (std::filesystem::path(out) / (driving + "_profile.csv")).string()
                            : out,
         os.str());
    return kExitOk;
  }

  if (*simulate) {
    harness::Scenario sc = scenario_or_fail(app, sim_scenario);
    if (seed_override >= 0) sc.seed = std::uint64_t(seed_override);
    harness::RunResult r = harness::run_scenario(sc, app.params);
    std::filesystem::path dir(out == "-" ? app.out_dir : out);
    std::filesystem::create_directories(dir);
    {
      std::ostringstream os;
      harness::write_timeseries_csv(os, r);
      emit((dir / (sc.name + "_timeseries.csv")).string(), os.str());
    }
    {
      std::ostringstream os;
      harness::write_replay_csv(os, r);
      emit((dir / (sc.name + "_replay.csv")).string(), os.str());
    }
    std::ostringstream os;
    harness::write_report_json(os, r, app.params);
    if (out == "-")
      std::cout << os.str();
    else
      emit((dir / (sc.name + "_report.json")).string(), os.str());
    std::cerr << "scenario " << sc.name << ": E_eq = " << r.report.e_eq_j / 1e6
              << " MJ, E_DAHE = " << r.report.e_dahe_j / 1e6
              << " MJ, idle = " << r.report.engine_idle_s << " s\n";
    return kExitOk;
  }

  if (*cmp) {
    std::vector<harness::ComparisonRow> rows;
    if (sweep) {
      if (app.sweep.temps_c.empty())
        throw ConfigError("config has no [sweep] section for compare --sweep");
      harness::Scenario tmpl = app.scenarios.at(app.sweep.scenario);
      if (seed_override >= 0) tmpl.seed = std::uint64_t(seed_override);
      rows = harness::sweep_ambient(tmpl, app.params, app.sweep.temps_c, app.sweep.seeds, jobs);
    } else {
      if (app.scenario_order.empty()) throw ConfigError("config defines no scenarios");
      harness::Scenario tmpl = app.scenarios.at(app.sweep.scenario.empty()
                                                    ? app.scenario_order.front()
                                                    : app.sweep.scenario);
      if (seed_override >= 0) tmpl.seed = std::uint64_t(seed_override);
      rows = harness::sweep_ambient(tmpl, app.params, {tmpl.ambient_c}, 1, 1);
    }
    std::ostringstream os;
    harness::write_comparison_csv(os, rows);
    emit(out == app.out_dir ? (std::filesystem::path(out) / "comparison.csv").string() : out,
         os.str());
    return kExitOk;
  }

  if (*calib) {
    if (app.calibration_scenarios.empty())
      throw ConfigError("config has no [calibration] section");
    std::vector<harness::Scenario> scenarios;
    for (const auto& name : app.calibration_scenarios) scenarios.push_back(app.scenarios.at(name));
    hvac::BetaCalibration cal =
        harness::calibrate_beta(app.params.beta, scenarios, app.params);
    nlohmann::json j = {{"scale", cal.schedule.scale},
                        {"mean_E_DAHE_eco_J", cal.mean_eco_dahe_j},
                        {"mean_E_DAHE_const_J", cal.mean_const_dahe_j},
                        {"gap_pct", 100.0 * cal.gap_rel},
                        {"evaluations", cal.evaluations}};
    std::cout << "calibrated beta scale = " << cal.schedule.scale
              << " (E_DAHE gap = " << 100.0 * cal.gap_rel << "%)\n";
    if (out != app.out_dir || !out.empty())
      emit(out == app.out_dir ? (std::filesystem::path(out) / "beta_calibration.json").string()
                              : out,
           j.dump(2) + "\n");
    return kExitOk;
  }

  if (*replay) {
    energy::ReplayConfig rc;
    rc.e_batt_j = app.params.powertrain.e_batt_j;
    rc.eta_sys = app.params.powertrain.eta_sys;
    rc.cp_jpkgk = app.params.cp_jpkgk;
    rc.afr_stoich = app.params.powertrain.afr_stoich;
    rc.lhv_jpkg = app.params.powertrain.lhv_jpkg;
    energy::EnergyReport rep = energy::replay_log(log_path, rc);
    nlohmann::json j = {{"log", log_path},
                        {"fuel_energy_J", rep.fuel_energy_j},
                        {"delta_soc", rep.delta_soc},
                        {"soc_correction_J", rep.soc_correction_j},
                        {"E_eq_J", rep.e_eq_j},
                        {"E_DAHE_J", rep.e_dahe_j},
                        {"engine_idle_s", rep.engine_idle_s},
                        {"distance_m", rep.distance_m},
                        {"accounting",
                         {{"E_batt_J", rc.e_batt_j},
                          {"eta_sys", rc.eta_sys},
                          {"cp_J_per_kgK", rc.cp_jpkgk},
                          {"AFR_stoich", rc.afr_stoich},
                          {"LHV_J_per_kg", rc.lhv_jpkg}}}};
    emit(out == app.out_dir ? "-" : out, j.dump(2) + "\n");
    return kExitOk;
  }

  if (*fit) {
    auto samples = load_alpha_samples(samples_path);
    hvac::AlphaFit res = hvac::fit_alpha(samples);
    nlohmann::json j = {{"a1", res.coeffs.a1},
                        {"a2", res.coeffs.a2},
                        {"a3", res.coeffs.a3},
                        {"a4", res.coeffs.a4},
                        {"setpoint_floor_c", res.coeffs.setpoint_floor_c},
                        {"rms_C", res.rms_c},
                        {"n_samples", samples.size()}};
    std::cout << "fitted alpha = (" << res.coeffs.a1 << ", " << res.coeffs.a2 << ", "
              << res.coeffs.a3 << ", " << res.coeffs.a4 << "), RMS residual = " << res.rms_c
              << " C over " << samples.size() << " samples\n";
    if (out != app.out_dir)
      emit(out, j.dump(2) + "\n");
    return kExitOk;
  }

  return kExitConfig;
}

} // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hevsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const hevsim::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
