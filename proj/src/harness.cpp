#include "hevsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <random>

#include <nlohmann/json.hpp>

#include "hevsim/errors.hpp"

namespace hevsim::harness {

const char* to_string(DrivingKind k) { return k == DrivingKind::Eco ? "eco" : "normal"; }
const char* to_string(HeatingKind k) { return k == HeatingKind::Eco ? "eco" : "constant"; }

namespace {

// Full-precision float formatting so CSV round-trips are bit-exact.
std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool same_corridor(const traffic::Corridor& a, const traffic::Corridor& b) {
  if (a.length_m != b.length_m || a.speed_limit_mps != b.speed_limit_mps ||
      a.intersections.size() != b.intersections.size())
    return false;
  for (std::size_t i = 0; i < a.intersections.size(); ++i) {
    const auto& x = a.intersections[i];
    const auto& y = b.intersections[i];
    if (x.position_m != y.position_m || x.cycle_s != y.cycle_s ||
        x.green_offset_s != y.green_offset_s || x.green_duration_s != y.green_duration_s ||
        x.initial_queue != y.initial_queue || x.discharge_rate_vps != y.discharge_rate_vps)
      return false;
  }
  return true;
}

} // namespace

traffic::SpeedProfile apply_driver(const traffic::SpeedProfile& target, const DriverParams& p,
                                   std::uint64_t seed) {
  traffic::SpeedProfile out;
  out.dt_s = target.dt_s;
  out.origin_time_s = target.origin_time_s;
  out.speeds_mps.reserve(target.speeds_mps.size());
  if (target.speeds_mps.empty()) return out;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const double a = std::exp(-target.dt_s / p.lag_tau_s);
  const double sigma_w = p.noise_std_mps * std::sqrt(std::max(0.0, 1.0 - p.noise_rho * p.noise_rho));
  double v_max = *std::max_element(target.speeds_mps.begin(), target.speeds_mps.end());

  double lag = target.speeds_mps.front();
  double noise = 0.0;
  for (double cmd : target.speeds_mps) {
    lag = a * lag + (1.0 - a) * cmd;
    noise = p.noise_rho * noise + sigma_w * n01(rng);
    double jitter = cmd > 0.25 ? noise : 0.0; // drivers hold a clean stop
    out.speeds_mps.push_back(std::clamp(lag + jitter, 0.0, v_max + 2.0));
  }
  return out;
}

RunResult run_scenario(const Scenario& s, const SimParams& params) {
  RunResult r;
  r.scenario = s;

  traffic::SpeedProfile plan =
      s.driving == DrivingKind::Eco
          ? traffic::plan_eco_trajectory(s.corridor, 0.0, 0.0, params.limits)
          : traffic::plan_normal_trajectory(s.corridor, 0.0, 0.0, params.limits);
  traffic::SpeedProfile driven = apply_driver(plan, params.driver, s.seed);

  const std::size_t n = driven.speeds_mps.size();
  if (n < 2) throw DomainError("scenario '" + s.name + "' produced an empty profile");
  const double dt = driven.dt_s;

  plant::PlantState st;
  st.t_s = 0.0;
  st.v_mps = driven.speeds_mps[0];
  st.coolant_c = s.coolant0_c;
  st.cabin_c = s.cabin0_c;
  st.soc = s.soc0;

  auto reserve = [&](auto& v) { v.reserve(n); };
  reserve(r.t_s);
  reserve(r.v_cmd_mps);
  reserve(r.v_mps);
  reserve(r.coolant_c);
  reserve(r.cabin_c);
  reserve(r.soc);
  reserve(r.dahp_w);
  reserve(r.setpoint_c);
  reserve(r.blower_pct);
  reserve(r.mdot_air_kgps);
  reserve(r.mdot_bl_kgps);
  reserve(r.vent_c);
  reserve(r.q_engine_w);
  r.engine_on.reserve(n);

  std::vector<double> preview(std::size_t(std::max(params.mpc.horizon_steps, 1)));
  hvac::HvacCommand prev_cmd = hvac::constant_heating();

  auto& rep = r.report;
  try {
    for (std::size_t k = 0; k + 1 < n; ++k) {
      double v_k = driven.speeds_mps[k];
      double accel = (driven.speeds_mps[k + 1] - v_k) / dt;
      double p_dem = plant::traction_power(v_k, accel, params.vehicle);

      plant::PlantState after_pt = plant::step_powertrain(st, p_dem, params.powertrain, dt);
      double fuel_power = (after_pt.fuel_kg - st.fuel_kg) / dt * params.powertrain.lhv_jpkg;
      double q_eng = plant::engine_heat(fuel_power, params.thermal);

      hvac::HvacCommand cmd;
      if (s.heating == HeatingKind::Constant) {
        cmd = hvac::constant_heating();
      } else {
        // preview from the planned trajectory, final sample repeated
        for (std::size_t i = 0; i < preview.size(); ++i) {
          std::size_t idx = std::min(k + i, n - 1);
          preview[i] = plan.speeds_mps[idx];
        }
        hvac::MpcResult mpc =
            hvac::mpc_step(st.coolant_c, s.ambient_c, preview, params.mpc, params.beta,
                           params.alpha, params.blower, params.cp_jpkgk, prev_cmd);
        cmd = mpc.command;
      }
      prev_cmd = cmd;

      double vent = hvac::vent_air_temp(cmd.setpoint_c, st.coolant_c, params.alpha);
      double flow = hvac::blower_flow(cmd.blower_pct, params.blower);
      double p_dahp = hvac::dahp(vent, s.ambient_c, flow, params.cp_jpkgk);
      double q_heat = std::max(p_dahp, 0.0);

      r.t_s.push_back(st.t_s);
      r.v_cmd_mps.push_back(plan.speeds_mps[k]);
      r.v_mps.push_back(v_k);
      r.coolant_c.push_back(st.coolant_c);
      r.cabin_c.push_back(st.cabin_c);
      r.soc.push_back(st.soc);
      r.engine_on.push_back(after_pt.engine_on ? 1 : 0);
      r.dahp_w.push_back(p_dahp);
      r.setpoint_c.push_back(cmd.setpoint_c);
      r.blower_pct.push_back(cmd.blower_pct);
      r.mdot_air_kgps.push_back(after_pt.mdot_air_kgps);
      r.mdot_bl_kgps.push_back(flow);
      r.vent_c.push_back(vent);
      r.q_engine_w.push_back(q_eng);

      // accounting uses exactly the logged row values so that replaying
      // the emitted log reproduces this report
      rep.fuel_energy_j +=
          after_pt.mdot_air_kgps / (1.0 * params.powertrain.afr_stoich) * params.powertrain.lhv_jpkg * dt;
      rep.e_dahe_j += std::max(params.cp_jpkgk * (vent - s.ambient_c) * flow, 0.0) * dt;
      if (v_k < 0.5 && after_pt.engine_on) rep.engine_idle_s += dt;
      rep.distance_m += 0.5 * (v_k + driven.speeds_mps[k + 1]) * dt;

      st = plant::step_thermal(after_pt, q_eng, q_heat, s.ambient_c, params.thermal, dt);
      st.t_s += dt;
      st.v_mps = driven.speeds_mps[k + 1];
    }
  } catch (const DomainError& e) {
    throw DomainError("scenario '" + s.name + "': " + e.what());
  }

  // terminal row: state only, inputs repeated
  r.t_s.push_back(st.t_s);
  r.v_cmd_mps.push_back(plan.speeds_mps[n - 1]);
  r.v_mps.push_back(driven.speeds_mps[n - 1]);
  r.coolant_c.push_back(st.coolant_c);
  r.cabin_c.push_back(st.cabin_c);
  r.soc.push_back(st.soc);
  r.engine_on.push_back(r.engine_on.back());
  r.dahp_w.push_back(r.dahp_w.back());
  r.setpoint_c.push_back(r.setpoint_c.back());
  r.blower_pct.push_back(r.blower_pct.back());
  r.mdot_air_kgps.push_back(r.mdot_air_kgps.back());
  r.mdot_bl_kgps.push_back(r.mdot_bl_kgps.back());
  r.vent_c.push_back(r.vent_c.back());
  r.q_engine_w.push_back(r.q_engine_w.back());

  rep.delta_soc = r.soc.front() - r.soc.back();
  rep.soc_correction_j = params.powertrain.e_batt_j * rep.delta_soc / params.powertrain.eta_sys;
  rep.e_eq_j = rep.fuel_energy_j + rep.soc_correction_j;
  return r;
}

std::string ambient_group(double ambient_c) {
  if (ambient_c <= -5.0) return "very_cold";
  if (ambient_c <= 0.0) return "cold";
  return "mild";
}

ComparisonRow compare(const RunResult& base, const RunResult& eco) {
  if (base.scenario.ambient_c != eco.scenario.ambient_c)
    throw IncomparableScenarios("ambient temperatures differ: " +
                                std::to_string(base.scenario.ambient_c) + " vs " +
                                std::to_string(eco.scenario.ambient_c));
  if (!same_corridor(base.scenario.corridor, eco.scenario.corridor))
    throw IncomparableScenarios("corridors differ between compared runs");
  ComparisonRow row;
  row.group = ambient_group(base.scenario.ambient_c);
  row.ambient_c = base.scenario.ambient_c;
  row.seed = base.scenario.seed;
  row.e_eq_base_j = base.report.e_eq_j;
  row.e_eq_eco_j = eco.report.e_eq_j;
  row.saving_pct = 100.0 * (base.report.e_eq_j - eco.report.e_eq_j) / base.report.e_eq_j;
  row.e_dahe_base_j = base.report.e_dahe_j;
  row.e_dahe_eco_j = eco.report.e_dahe_j;
  row.idle_base_s = base.report.engine_idle_s;
  row.idle_eco_s = eco.report.engine_idle_s;
  return row;
}

std::vector<ComparisonRow> sweep_ambient(const Scenario& base, const SimParams& params,
                                         const std::vector<double>& temps_c, int n_seeds,
                                         int jobs) {
  if (temps_c.empty()) throw DomainError("ambient sweep needs at least one temperature");
  if (n_seeds < 1) throw DomainError("ambient sweep needs at least one seed");

  struct Job {
    Scenario constant, eco;
  };
  std::vector<Job> work;
  for (double t_amb : temps_c) {
    for (int seed = 0; seed < n_seeds; ++seed) {
      Job j;
      j.constant = base;
      j.constant.ambient_c = t_amb;
      j.constant.seed = base.seed + std::uint64_t(seed);
      j.constant.heating = HeatingKind::Constant;
      j.constant.name = base.name + "_const";
      j.eco = j.constant;
      j.eco.heating = HeatingKind::Eco;
      j.eco.name = base.name + "_eco";
      work.push_back(std::move(j));
    }
  }

  std::vector<ComparisonRow> rows(work.size());
  auto run_one = [&](std::size_t i) {
    RunResult a = run_scenario(work[i].constant, params);
    RunResult b = run_scenario(work[i].eco, params);
    rows[i] = compare(a, b);
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < work.size(); ++i) run_one(i);
  } else {
    std::size_t next = 0;
    while (next < work.size()) {
      std::vector<std::future<void>> batch;
      for (int j = 0; j < jobs && next < work.size(); ++j, ++next)
        batch.push_back(std::async(std::launch::async, run_one, next));
      for (auto& f : batch) f.get();
    }
  }
  return rows;
}

hvac::BetaCalibration calibrate_beta(const hvac::BetaSchedule& base,
                                     const std::vector<Scenario>& scenarios,
                                     const SimParams& params) {
  if (scenarios.empty()) throw DomainError("calibration scenario list is empty");

  double const_mean = 0.0;
  for (const auto& s : scenarios) {
    Scenario c = s;
    c.heating = HeatingKind::Constant;
    const_mean += run_scenario(c, params).report.e_dahe_j;
  }
  const_mean /= double(scenarios.size());

  auto eco_mean = [&](const hvac::BetaSchedule& sched) {
    SimParams p = params;
    p.beta = sched;
    double sum = 0.0;
    for (const auto& s : scenarios) {
      Scenario e = s;
      e.heating = HeatingKind::Eco;
      sum += run_scenario(e, p).report.e_dahe_j;
    }
    return sum / double(scenarios.size());
  };
  return hvac::calibrate_beta(base, eco_mean, const_mean);
}

void write_profile_csv(std::ostream& out, const traffic::SpeedProfile& p) {
  out << "t_s,v_mps\n";
  for (std::size_t k = 0; k < p.speeds_mps.size(); ++k)
    out << g17(p.origin_time_s + double(k) * p.dt_s) << ',' << g17(p.speeds_mps[k]) << '\n';
}

void write_timeseries_csv(std::ostream& out, const RunResult& r) {
  out << "t_s,v_cmd_mps,v_mps,T_cl_C,T_cab_C,soc,engine_on,P_DAHP_W,T_sp_C,W_bl_pct\n";
  for (std::size_t k = 0; k < r.t_s.size(); ++k) {
    out << g17(r.t_s[k]) << ',' << g17(r.v_cmd_mps[k]) << ',' << g17(r.v_mps[k]) << ','
        << g17(r.coolant_c[k]) << ',' << g17(r.cabin_c[k]) << ',' << g17(r.soc[k]) << ','
        << int(r.engine_on[k]) << ',' << g17(r.dahp_w[k]) << ',' << g17(r.setpoint_c[k]) << ','
        << g17(r.blower_pct[k]) << '\n';
  }
}

void write_replay_csv(std::ostream& out, const RunResult& r) {
  out << "t_s,v_mps,mdot_air_kgps,lambda,soc,engine_on,T_ain_C,T_amb_C,mdot_bl_kgps\n";
  for (std::size_t k = 0; k < r.t_s.size(); ++k) {
    out << g17(r.t_s[k]) << ',' << g17(r.v_mps[k]) << ',' << g17(r.mdot_air_kgps[k]) << ",1,"
        << g17(r.soc[k]) << ',' << int(r.engine_on[k]) << ',' << g17(r.vent_c[k]) << ','
        << g17(r.scenario.ambient_c) << ',' << g17(r.mdot_bl_kgps[k]) << '\n';
  }
}

void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << "group,T_amb_C,seed,E_eq_base_J,E_eq_eco_J,saving_pct,E_DAHE_base_J,E_DAHE_eco_J,"
         "idle_base_s,idle_eco_s\n";
  for (const auto& row : rows) {
    out << row.group << ',' << g17(row.ambient_c) << ',' << row.seed << ','
        << g17(row.e_eq_base_j) << ',' << g17(row.e_eq_eco_j) << ',' << g17(row.saving_pct) << ','
        << g17(row.e_dahe_base_j) << ',' << g17(row.e_dahe_eco_j) << ',' << g17(row.idle_base_s)
        << ',' << g17(row.idle_eco_s) << '\n';
  }
}

void write_report_json(std::ostream& out, const RunResult& r, const SimParams& params) {
  nlohmann::json j;
  j["scenario"] = {{"name", r.scenario.name},
                   {"driving", to_string(r.scenario.driving)},
                   {"heating", to_string(r.scenario.heating)},
                   {"T_amb_C", r.scenario.ambient_c},
                   {"T_cab0_C", r.scenario.cabin0_c},
                   {"T_cl0_C", r.scenario.coolant0_c},
                   {"soc0", r.scenario.soc0},
                   {"seed", r.scenario.seed},
                   {"corridor", r.scenario.corridor_file}};
  j["report"] = {{"fuel_energy_J", r.report.fuel_energy_j},
                 {"delta_soc", r.report.delta_soc},
                 {"soc_correction_J", r.report.soc_correction_j},
                 {"E_eq_J", r.report.e_eq_j},
                 {"E_DAHE_J", r.report.e_dahe_j},
                 {"engine_idle_s", r.report.engine_idle_s},
                 {"distance_m", r.report.distance_m}};
  j["accounting"] = {{"E_batt_J", params.powertrain.e_batt_j},
                     {"eta_sys", params.powertrain.eta_sys},
                     {"LHV_J_per_kg", params.powertrain.lhv_jpkg},
                     {"AFR_stoich", params.powertrain.afr_stoich},
                     {"cp_J_per_kgK", params.cp_jpkgk}};
  out << j.dump(2) << '\n';
}

} // namespace hevsim::harness
