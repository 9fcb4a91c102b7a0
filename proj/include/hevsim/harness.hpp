#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "hevsim/energy.hpp"
#include "hevsim/hvac.hpp"
#include "hevsim/plant.hpp"
#include "hevsim/traffic.hpp"

namespace hevsim::harness {

enum class DrivingKind { Normal, Eco };
enum class HeatingKind { Constant, Eco };

const char* to_string(DrivingKind k);
const char* to_string(HeatingKind k);

struct DriverParams {
  double lag_tau_s = 1.0;
  double noise_std_mps = 0.6; // stationary AR(1) std
  double noise_rho = 0.8;
};

struct Scenario {
  std::string name;
  DrivingKind driving = DrivingKind::Eco;
  HeatingKind heating = HeatingKind::Constant;
  double ambient_c = -5.0;
  double cabin0_c = 14.0;
  double coolant0_c = 85.0;
  double soc0 = 0.6;
  std::uint64_t seed = 1;
  std::string corridor_file; // provenance only
  traffic::Corridor corridor;
};

/// Everything a run needs besides the scenario itself.
struct SimParams {
  plant::VehicleParams vehicle;
  plant::ThermalParams thermal;
  plant::PowertrainParams powertrain;
  traffic::PlannerLimits limits;
  DriverParams driver;
  hvac::AlphaCoeffs alpha;
  hvac::BetaSchedule beta;
  hvac::BlowerMap blower;
  hvac::MpcConfig mpc;
  double cp_jpkgk = 1005.0;
};

/// Closed-loop time series, one row per sample. Rows 0..N-2 carry the
/// state at t_k plus the inputs applied over [t_k, t_k+1); the final row
/// is the terminal state with repeated input values.
struct RunResult {
  Scenario scenario;
  std::vector<double> t_s, v_cmd_mps, v_mps, coolant_c, cabin_c, soc, dahp_w, setpoint_c,
      blower_pct, mdot_air_kgps, mdot_bl_kgps, vent_c, q_engine_w;
  std::vector<std::uint8_t> engine_on;
  energy::EnergyReport report;
};

/// First-order lag plus seeded AR(1) tracking noise (suppressed while the
/// target is stopped), clamped at zero.
traffic::SpeedProfile apply_driver(const traffic::SpeedProfile& target, const DriverParams& p,
                                   std::uint64_t seed);

RunResult run_scenario(const Scenario& s, const SimParams& params);

struct ComparisonRow {
  std::string group;
  double ambient_c = 0.0;
  std::uint64_t seed = 0;
  double e_eq_base_j = 0.0;
  double e_eq_eco_j = 0.0;
  double saving_pct = 0.0;
  double e_dahe_base_j = 0.0;
  double e_dahe_eco_j = 0.0;
  double idle_base_s = 0.0;
  double idle_eco_s = 0.0;
};

/// Paired comparison (identical corridor and ambient; throws
/// IncomparableScenarios otherwise). `base` is the reference run.
ComparisonRow compare(const RunResult& base, const RunResult& eco);

/// "very_cold" (<= -5), "cold" (-5, 0], "mild" (> 0).
std::string ambient_group(double ambient_c);

/// Runs paired (constant, eco) heating twins per temperature x seed.
std::vector<ComparisonRow> sweep_ambient(const Scenario& base, const SimParams& params,
                                         const std::vector<double>& temps_c, int n_seeds,
                                         int jobs = 1);

/// Constant-heating-equivalence calibration of the schedule scale over a
/// scenario set (scenarios are run with both heating modes).
hvac::BetaCalibration calibrate_beta(const hvac::BetaSchedule& base,
                                     const std::vector<Scenario>& scenarios,
                                     const SimParams& params);

void write_timeseries_csv(std::ostream& out, const RunResult& r);
void write_replay_csv(std::ostream& out, const RunResult& r);
void write_comparison_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);
void write_report_json(std::ostream& out, const RunResult& r, const SimParams& params);
void write_profile_csv(std::ostream& out, const traffic::SpeedProfile& p);

} // namespace hevsim::harness
