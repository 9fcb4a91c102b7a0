#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace hevsim::hvac {

// HVAC actuator box (setpoint in degC, blower in percent PWM).
inline constexpr double kSetpointMin = 18.0;
inline constexpr double kSetpointMax = 24.0;
inline constexpr double kBlowerMin = 10.0;
inline constexpr double kBlowerMax = 70.0;

struct HvacCommand {
  double setpoint_c = 23.0;
  double blower_pct = 40.0;
};

/// Vent air temperature regression: a1*Tsp + a2*(Tsp - floor)*Tcl + a3*Tsp^2 + a4.
struct AlphaCoeffs {
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
  double a4 = 0.0;
  double setpoint_floor_c = 15.0;
};

/// Speed-indexed multiplier on the target heating power. Piecewise-linear
/// between breakpoints (speed in m/s), constant beyond the ends, times a
/// global scale chosen by calibration.
struct BetaSchedule {
  std::vector<std::pair<double, double>> points; // (v_mps, beta)
  double scale = 1.0;
};

/// Blower PWM percent -> air mass flow map, strictly increasing.
struct BlowerMap {
  std::vector<std::pair<double, double>> points; // (pct, kg/s)
  double min_flow() const { return points.front().second; }
  double max_flow() const { return points.back().second; }
};

struct MpcConfig {
  int horizon_steps = 30;
  double dt_s = 1.0;
  double setpoint_grid_step_c = 0.25;
  double rate_penalty = 0.0;
};

struct MpcResult {
  HvacCommand command;
  double predicted_dahp_w = 0.0;
  double cost = 0.0;
  bool degenerate_vent = false;
};

double vent_air_temp(double setpoint_c, double coolant_c, const AlphaCoeffs& a);
double dahp(double vent_c, double ambient_c, double flow_kgps, double cp_jpkgk);
double beta(double v_mps, const BetaSchedule& sched);

/// Throws OutOfRange outside [kBlowerMin, kBlowerMax].
double blower_flow(double pct, const BlowerMap& map);
/// Inverse of the map; flow is clamped to the map range first.
double blower_pct_for_flow(double flow_kgps, const BlowerMap& map);

HvacCommand constant_heating();

/// Heating power a constant-input baseline controller would deliver at the
/// measured coolant temperature.
double target_dahp(double coolant_c, double ambient_c, const AlphaCoeffs& a,
                   const BlowerMap& map, double cp_jpkgk);

/// Receding-horizon tracking step: minimizes sum_i (P_DAHP(i) -
/// beta(v(i)) * P_target)^2 with the coolant temperature frozen at the
/// measurement, inputs box-constrained. Setpoint gridded, optimal flow
/// closed-form per candidate. With rate_penalty == 0 the steps separate
/// and the applied command is the i = 0 minimizer.
MpcResult mpc_step(double coolant_meas_c, double ambient_c, std::span<const double> speed_preview,
                   const MpcConfig& cfg, const BetaSchedule& sched, const AlphaCoeffs& a,
                   const BlowerMap& map, double cp_jpkgk, const HvacCommand& prev);

struct AlphaSample {
  double setpoint_c = 0.0;
  double coolant_c = 0.0;
  double vent_c = 0.0;
};

struct AlphaFit {
  AlphaCoeffs coeffs;
  double rms_c = 0.0;
};

/// Least-squares identification of the vent-air model. Throws
/// RankDeficient when the regression matrix is singular (fewer than 4
/// affinely independent samples).
AlphaFit fit_alpha(const std::vector<AlphaSample>& samples, double setpoint_floor_c = 15.0);

struct BetaCalibration {
  BetaSchedule schedule;
  double mean_eco_dahe_j = 0.0;
  double mean_const_dahe_j = 0.0;
  double gap_rel = 0.0;
  int evaluations = 0;
};

/// Scalar bisection on the schedule scale in [0.5, 2.0] so that the mean
/// eco-heating DAHE matches the constant-heating mean within rel_tol.
/// `eco_mean_dahe` runs the calibration scenarios under a candidate
/// schedule. Throws NoBracket when no scale in the bracket can close the
/// gap (the message reports the achieved gap).
BetaCalibration calibrate_beta(const BetaSchedule& base,
                               const std::function<double(const BetaSchedule&)>& eco_mean_dahe,
                               double const_mean_dahe_j, double rel_tol = 0.01);

} // namespace hevsim::hvac
