#include "hevsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hevsim/errors.hpp"

namespace hevsim::config {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double parse_number(const File& f, const Value& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double x = std::stod(v.raw, &used);
    if (trim(v.raw.substr(used)).empty()) return x;
  } catch (const std::exception&) {
  }
  f.fail(v.line, "value of '" + key + "' is not a number: '" + v.raw + "'");
}

} // namespace

void File::fail(int line, const std::string& msg) const {
  throw ConfigError(path + ":" + std::to_string(line) + ": " + msg);
}

const Section* File::find(const std::string& name, const std::string& label) const {
  for (const auto& s : sections)
    if (s.name == name && (label.empty() || s.label == label)) return &s;
  return nullptr;
}

std::vector<const Section*> File::all(const std::string& name) const {
  std::vector<const Section*> out;
  for (const auto& s : sections)
    if (s.name == name) out.push_back(&s);
  return out;
}

const Section& File::require(const std::string& name, const std::string& label) const {
  const Section* s = find(name, label);
  if (!s)
    throw ConfigError(path + ": missing section [" + name + (label.empty() ? "" : " " + label) +
                      "]");
  return *s;
}

double File::number(const Section& s, const std::string& key) const {
  auto it = s.values.find(key);
  if (it == s.values.end())
    fail(s.line, "section [" + s.name + "] is missing key '" + key + "'");
  return parse_number(*this, it->second, key);
}

double File::number_or(const Section& s, const std::string& key, double fallback) const {
  auto it = s.values.find(key);
  return it == s.values.end() ? fallback : parse_number(*this, it->second, key);
}

std::string File::text(const Section& s, const std::string& key) const {
  auto it = s.values.find(key);
  if (it == s.values.end())
    fail(s.line, "section [" + s.name + "] is missing key '" + key + "'");
  return it->second.raw;
}

std::string File::text_or(const Section& s, const std::string& key,
                          const std::string& fallback) const {
  auto it = s.values.find(key);
  return it == s.values.end() ? fallback : it->second.raw;
}

std::vector<double> File::number_list(const Section& s, const std::string& key) const {
  auto it = s.values.find(key);
  if (it == s.values.end())
    fail(s.line, "section [" + s.name + "] is missing key '" + key + "'");
  std::vector<double> out;
  std::stringstream ss(it->second.raw);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) continue;
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      fail(it->second.line, "bad number '" + cell + "' in list '" + key + "'");
    }
  }
  if (out.empty()) fail(it->second.line, "list '" + key + "' is empty");
  return out;
}

std::vector<std::pair<double, double>> File::pair_list(const Section& s,
                                                       const std::string& key) const {
  auto it = s.values.find(key);
  if (it == s.values.end())
    fail(s.line, "section [" + s.name + "] is missing key '" + key + "'");
  std::vector<std::pair<double, double>> out;
  std::stringstream ss(it->second.raw);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (cell.empty()) continue;
    std::size_t colon = cell.find(':');
    if (colon == std::string::npos)
      fail(it->second.line, "breakpoint '" + cell + "' in '" + key + "' must be 'x:y'");
    try {
      out.emplace_back(std::stod(trim(cell.substr(0, colon))),
                       std::stod(trim(cell.substr(colon + 1))));
    } catch (const std::exception&) {
      fail(it->second.line, "bad breakpoint '" + cell + "' in '" + key + "'");
    }
  }
  if (out.size() < 2) fail(it->second.line, "table '" + key + "' needs at least two breakpoints");
  return out;
}

File parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  File f;
  f.path = path;
  std::string line;
  int lineno = 0;
  Section* current = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') f.fail(lineno, "unterminated section header");
      std::string inner = trim(line.substr(1, line.size() - 2));
      if (inner.empty()) f.fail(lineno, "empty section name");
      Section s;
      s.line = lineno;
      std::size_t space = inner.find_first_of(" \t");
      if (space == std::string::npos) {
        s.name = inner;
      } else {
        s.name = inner.substr(0, space);
        s.label = trim(inner.substr(space + 1));
      }
      f.sections.push_back(std::move(s));
      current = &f.sections.back();
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) f.fail(lineno, "expected 'key = value'");
    if (!current) f.fail(lineno, "key outside of any [section]");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty()) f.fail(lineno, "empty key");
    if (current->values.count(key)) f.fail(lineno, "duplicate key '" + key + "'");
    current->values[key] = Value{val, lineno};
  }
  return f;
}

traffic::Corridor load_corridor(const std::string& path) {
  File f = parse_file(path);
  const Section& c = f.require("corridor");
  traffic::Corridor out;
  out.length_m = f.number(c, "length_m");
  out.speed_limit_mps = f.number(c, "speed_limit_mps");
  int next_id = 1;
  for (const Section* s : f.all("intersection")) {
    traffic::Intersection x;
    x.id = int(f.number_or(*s, "id", double(next_id)));
    x.position_m = f.number(*s, "position_m");
    x.cycle_s = f.number(*s, "cycle_s");
    x.green_offset_s = f.number(*s, "green_offset_s");
    x.green_duration_s = f.number(*s, "green_duration_s");
    x.initial_queue = f.number(*s, "initial_queue");
    x.discharge_rate_vps = f.number(*s, "discharge_rate");
    x.discharge_headway_m = f.number_or(*s, "discharge_headway_m", 7.0);
    x.arrival_rate_vps = f.number_or(*s, "arrival_rate", 0.0);
    out.intersections.push_back(x);
    next_id = x.id + 1;
  }
  try {
    out.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return out;
}

namespace {

void validate_alpha(const File& f, const Section& s, const hvac::AlphaCoeffs& a) {
  // monotone response over the operating box, checked on a grid
  for (double sp = hvac::kSetpointMin; sp <= hvac::kSetpointMax + 1e-9; sp += 0.5) {
    for (double cl = 40.0; cl <= 90.0 + 1e-9; cl += 2.5) {
      double d_sp = hvac::vent_air_temp(sp + 1e-4, cl, a) - hvac::vent_air_temp(sp, cl, a);
      double d_cl = hvac::vent_air_temp(sp, cl + 1e-4, a) - hvac::vent_air_temp(sp, cl, a);
      if (d_sp < -1e-9)
        f.fail(s.line, "vent-air model not monotone in the setpoint at (" + std::to_string(sp) +
                           ", " + std::to_string(cl) + ")");
      if (d_cl < -1e-9)
        f.fail(s.line, "vent-air model not monotone in the coolant temperature at (" +
                           std::to_string(sp) + ", " + std::to_string(cl) + ")");
    }
  }
}

void validate_beta(const File& f, const Section& s, const hvac::BetaSchedule& b) {
  for (std::size_t i = 0; i + 1 < b.points.size(); ++i)
    if (!(b.points[i].first < b.points[i + 1].first))
      f.fail(s.line, "beta breakpoints must have strictly increasing speeds");
  for (const auto& [v, val] : b.points)
    if (!(val > 0.0)) f.fail(s.line, "beta must be positive everywhere");
  double at_zero = hvac::beta(0.0, b);
  for (const auto& [v, val] : b.points)
    if (hvac::beta(v, b) < at_zero - 1e-12)
      f.fail(s.line, "beta must take its lowest value at v = 0");
  const double v20mph = 8.9408;
  if (!(hvac::beta(v20mph, b) > 1.0))
    f.fail(s.line, "beta*scale must exceed 1 for v >= 20 mph");
  for (const auto& [v, val] : b.points)
    if (v >= v20mph && !(val * b.scale > 1.0))
      f.fail(s.line, "beta*scale must exceed 1 for v >= 20 mph");
}

void validate_blower(const File& f, const Section& s, const hvac::BlowerMap& m) {
  for (std::size_t i = 0; i + 1 < m.points.size(); ++i)
    if (!(m.points[i].first < m.points[i + 1].first && m.points[i].second < m.points[i + 1].second))
      f.fail(s.line, "blower map must be strictly increasing in both columns");
  if (!(m.points.front().first <= hvac::kBlowerMin && m.points.back().first >= hvac::kBlowerMax))
    f.fail(s.line, "blower map must span the actuator range [10, 70]");
  if (!(m.points.front().second > 0.0)) f.fail(s.line, "blower flow must be positive at 10%");
}

harness::Scenario load_scenario(const File& f, const Section& s,
                                const std::filesystem::path& base_dir) {
  harness::Scenario sc;
  sc.name = s.label.empty() ? "scenario" : s.label;
  std::string driving = f.text_or(s, "driving", "eco");
  if (driving == "eco")
    sc.driving = harness::DrivingKind::Eco;
  else if (driving == "normal")
    sc.driving = harness::DrivingKind::Normal;
  else
    f.fail(s.line, "driving must be 'eco' or 'normal', got '" + driving + "'");
  std::string heating = f.text_or(s, "heating", "constant");
  if (heating == "eco")
    sc.heating = harness::HeatingKind::Eco;
  else if (heating == "constant")
    sc.heating = harness::HeatingKind::Constant;
  else
    f.fail(s.line, "heating must be 'eco' or 'constant', got '" + heating + "'");
  sc.ambient_c = f.number(s, "t_amb_c");
  sc.cabin0_c = f.number_or(s, "t_cab0_c", 14.0);
  sc.coolant0_c = f.number_or(s, "t_cl0_c", 85.0);
  sc.soc0 = f.number_or(s, "soc0", 0.6);
  sc.seed = std::uint64_t(f.number_or(s, "seed", 1.0));
  sc.corridor_file = f.text(s, "corridor");
  std::filesystem::path p = sc.corridor_file;
  if (p.is_relative()) p = base_dir / p;
  sc.corridor = load_corridor(p.string());
  if (!(sc.soc0 > 0.0 && sc.soc0 < 1.0)) f.fail(s.line, "soc0 must lie in (0, 1)");
  return sc;
}

} // namespace

AppConfig load_app_config(const std::string& path) {
  File f = parse_file(path);
  std::filesystem::path base_dir = std::filesystem::path(path).parent_path();
  AppConfig app;
  auto& prm = app.params;

  if (const Section* s = f.find("vehicle")) {
    auto& v = prm.vehicle;
    v.mass_kg = f.number_or(*s, "mass_kg", v.mass_kg);
    v.road_a_n = f.number_or(*s, "road_a_n", v.road_a_n);
    v.road_b_npmps = f.number_or(*s, "road_b", v.road_b_npmps);
    v.road_c_npm2ps2 = f.number_or(*s, "road_c", v.road_c_npm2ps2);
    v.driveline_eff = f.number_or(*s, "driveline_eff", v.driveline_eff);
    v.regen_fraction = f.number_or(*s, "regen_fraction", v.regen_fraction);
    v.regen_power_limit_w = f.number_or(*s, "regen_power_limit_w", v.regen_power_limit_w);
    if (!(v.mass_kg > 0.0)) f.fail(s->line, "mass must be positive");
    if (!(v.driveline_eff > 0.0 && v.driveline_eff <= 1.0))
      f.fail(s->line, "driveline_eff must lie in (0, 1]");
    if (v.road_a_n < 0.0 || v.road_b_npmps < 0.0 || v.road_c_npm2ps2 < 0.0)
      f.fail(s->line, "road-load coefficients must be nonnegative");
  }

  if (const Section* s = f.find("thermal")) {
    auto& t = prm.thermal;
    t.coolant_heat_capacity_jpk = f.number_or(*s, "coolant_heat_capacity", t.coolant_heat_capacity_jpk);
    t.cabin_heat_capacity_jpk = f.number_or(*s, "cabin_heat_capacity", t.cabin_heat_capacity_jpk);
    t.cabin_ua_wpk = f.number_or(*s, "cabin_ua", t.cabin_ua_wpk);
    t.radiator_ua_wpk = f.number_or(*s, "radiator_ua", t.radiator_ua_wpk);
    t.thermostat_open_c = f.number_or(*s, "thermostat_open_c", t.thermostat_open_c);
    t.engine_heat_fraction = f.number_or(*s, "engine_heat_fraction", t.engine_heat_fraction);
    if (!(t.coolant_heat_capacity_jpk > 0.0 && t.cabin_heat_capacity_jpk > 0.0 &&
          t.cabin_ua_wpk > 0.0 && t.radiator_ua_wpk > 0.0))
      f.fail(s->line, "thermal capacities and conductances must be positive");
    if (!(t.engine_heat_fraction >= 0.0 && t.engine_heat_fraction <= 1.0))
      f.fail(s->line, "engine_heat_fraction must lie in [0, 1]");
  }

  if (const Section* s = f.find("powertrain")) {
    auto& p = prm.powertrain;
    p.e_batt_j = f.number_or(*s, "e_batt_j", p.e_batt_j);
    p.soc_min = f.number_or(*s, "soc_min", p.soc_min);
    p.soc_max = f.number_or(*s, "soc_max", p.soc_max);
    p.engine_on_power_w = f.number_or(*s, "engine_on_power_w", p.engine_on_power_w);
    p.t_cl_idle_on_c = f.number_or(*s, "t_cl_idle_on_c", p.t_cl_idle_on_c);
    p.t_cl_idle_off_c = f.number_or(*s, "t_cl_idle_off_c", p.t_cl_idle_off_c);
    p.eta_eng = f.number_or(*s, "eta_eng", p.eta_eng);
    p.eta_sys = f.number_or(*s, "eta_sys", p.eta_sys);
    p.lhv_jpkg = f.number_or(*s, "lhv_j_per_kg", p.lhv_jpkg);
    p.afr_stoich = f.number_or(*s, "afr_stoich", p.afr_stoich);
    p.idle_fuel_rate_kgps = f.number_or(*s, "idle_fuel_rate_kg_per_s", p.idle_fuel_rate_kgps);
    p.idle_charge_power_w = f.number_or(*s, "idle_charge_power_w", p.idle_charge_power_w);
    if (!(p.soc_min < p.soc_max)) f.fail(s->line, "soc_min must be below soc_max");
    if (!(p.eta_eng > 0.0 && p.eta_eng <= 1.0 && p.eta_sys > 0.0 && p.eta_sys <= 1.0))
      f.fail(s->line, "efficiencies must lie in (0, 1]");
    if (!(p.e_batt_j > 0.0)) f.fail(s->line, "battery capacity must be positive");
    if (!(p.t_cl_idle_on_c < p.t_cl_idle_off_c &&
          p.t_cl_idle_off_c < prm.thermal.thermostat_open_c))
      f.fail(s->line, "need t_cl_idle_on < t_cl_idle_off < thermostat_open");
  }

  if (const Section* s = f.find("limits")) {
    auto& l = prm.limits;
    l.accel_max_mps2 = f.number_or(*s, "a_max", l.accel_max_mps2);
    l.decel_max_mps2 = f.number_or(*s, "d_max", l.decel_max_mps2);
    l.v_cruise_mps = f.number_or(*s, "v_cruise", l.v_cruise_mps);
    l.v_min_glide_mps = f.number_or(*s, "v_min_glide", l.v_min_glide_mps);
    l.horizon_cycles = int(f.number_or(*s, "horizon_cycles", double(l.horizon_cycles)));
    if (!(l.accel_max_mps2 > 0.0 && l.decel_max_mps2 > 0.0))
      f.fail(s->line, "acceleration limits must be positive");
    if (!(l.v_min_glide_mps > 0.0 && l.v_min_glide_mps < l.v_cruise_mps))
      f.fail(s->line, "need 0 < v_min_glide < v_cruise");
    if (l.horizon_cycles < 1) f.fail(s->line, "horizon_cycles must be >= 1");
  }

  if (const Section* s = f.find("driver")) {
    auto& d = prm.driver;
    d.lag_tau_s = f.number_or(*s, "lag_tau_s", d.lag_tau_s);
    d.noise_std_mps = f.number_or(*s, "noise_std_mps", d.noise_std_mps);
    d.noise_rho = f.number_or(*s, "noise_rho", d.noise_rho);
    if (!(d.lag_tau_s > 0.0)) f.fail(s->line, "driver lag time constant must be positive");
    if (!(d.noise_std_mps >= 0.0)) f.fail(s->line, "driver noise std must be >= 0");
    if (!(d.noise_rho >= 0.0 && d.noise_rho < 1.0))
      f.fail(s->line, "driver noise_rho must lie in [0, 1)");
  }

  {
    const Section& s = f.require("alpha");
    prm.alpha.a1 = f.number(s, "a1");
    prm.alpha.a2 = f.number(s, "a2");
    prm.alpha.a3 = f.number(s, "a3");
    prm.alpha.a4 = f.number(s, "a4");
    prm.alpha.setpoint_floor_c = f.number_or(s, "setpoint_floor_c", 15.0);
    validate_alpha(f, s, prm.alpha);
  }
  {
    const Section& s = f.require("beta");
    prm.beta.points = f.pair_list(s, "points");
    prm.beta.scale = f.number_or(s, "scale", 1.0);
    validate_beta(f, s, prm.beta);
  }
  {
    const Section& s = f.require("blower");
    prm.blower.points = f.pair_list(s, "points");
    validate_blower(f, s, prm.blower);
  }

  if (const Section* s = f.find("mpc")) {
    auto& m = prm.mpc;
    m.horizon_steps = int(f.number_or(*s, "horizon_steps", double(m.horizon_steps)));
    m.dt_s = f.number_or(*s, "dt_s", m.dt_s);
    m.setpoint_grid_step_c = f.number_or(*s, "setpoint_grid_step_c", m.setpoint_grid_step_c);
    m.rate_penalty = f.number_or(*s, "rate_penalty", m.rate_penalty);
    if (m.horizon_steps < 1) f.fail(s->line, "mpc horizon must be >= 1 step");
    double span = (hvac::kSetpointMax - hvac::kSetpointMin) / m.setpoint_grid_step_c;
    if (std::abs(span - std::round(span)) > 1e-9)
      f.fail(s->line, "setpoint grid step must divide the setpoint range");
    if (!(m.rate_penalty >= 0.0)) f.fail(s->line, "rate_penalty must be >= 0");
  }

  if (const Section* s = f.find("hvac"))
    prm.cp_jpkgk = f.number_or(*s, "cp_j_per_kgk", prm.cp_jpkgk);

  for (const Section* s : f.all("scenario")) {
    if (s->label.empty()) f.fail(s->line, "scenario sections need a name: [scenario <name>]");
    harness::Scenario sc = load_scenario(f, *s, base_dir);
    if (app.scenarios.count(sc.name)) f.fail(s->line, "duplicate scenario '" + sc.name + "'");
    app.scenarios[sc.name] = std::move(sc);
    app.scenario_order.push_back(s->label);
  }

  if (const Section* s = f.find("sweep")) {
    app.sweep.temps_c = f.number_list(*s, "temps_c");
    app.sweep.seeds = int(f.number_or(*s, "seeds", 3.0));
    app.sweep.scenario = f.text(*s, "scenario");
    if (app.sweep.seeds < 1) f.fail(s->line, "sweep seeds must be >= 1");
    if (!app.scenarios.count(app.sweep.scenario))
      f.fail(s->line, "sweep scenario '" + app.sweep.scenario + "' is not defined");
  }

  if (const Section* s = f.find("calibration")) {
    std::stringstream ss(f.text(*s, "scenarios"));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::string name = trim(cell);
      if (name.empty()) continue;
      if (!app.scenarios.count(name))
        f.fail(s->line, "calibration scenario '" + name + "' is not defined");
      app.calibration_scenarios.push_back(name);
    }
    if (app.calibration_scenarios.empty())
      f.fail(s->line, "calibration scenario list is empty");
  }

  if (const Section* s = f.find("output")) app.out_dir = f.text_or(*s, "dir", app.out_dir);

  return app;
}

} // namespace hevsim::config
