#pragma once

#include <span>
#include <string>

namespace hevsim::energy {

struct EnergyReport {
  double fuel_energy_j = 0.0;
  double delta_soc = 0.0;        // SOC(0) - SOC(t_f)
  double soc_correction_j = 0.0; // E_batt * delta_soc / eta_sys
  double e_eq_j = 0.0;           // fuel_energy_j + soc_correction_j, exactly
  double e_dahe_j = 0.0;
  double engine_idle_s = 0.0;
  double distance_m = 0.0;
};

/// Discharge air heating energy: sum of max(p, 0) * dt.
double dahe(std::span<const double> dahp_w, double dt_s);

double equivalent_energy(double fuel_energy_j, double delta_soc, double e_batt_j,
                         double eta_sys);

/// MAF/lambda fuel-energy integral. Throws InvalidLambda on lambda <= 0.
double fuel_energy_from_maf(std::span<const double> mdot_air_kgps,
                            std::span<const double> lambda, double afr_stoich, double lhv_jpkg,
                            double dt_s);

struct ReplayConfig {
  double e_batt_j = 4.32e6;
  double eta_sys = 0.30;
  double cp_jpkgk = 1005.0;
  double afr_stoich = 14.7;
  double lhv_jpkg = 44.0e6;
  double idle_speed_mps = 0.5;
};

/// Offline accounting from a telemetry CSV with the exact header
/// `t_s,v_mps,mdot_air_kgps,lambda,soc,engine_on,T_ain_C,T_amb_C,mdot_bl_kgps`.
/// Rows integrate left-Riemann over dt_i = t_{i+1} - t_i; the final row
/// terminates the integration (state only). Throws SchemaError on a
/// missing column and MonotonicityError on non-increasing timestamps.
EnergyReport replay_log(const std::string& path, const ReplayConfig& cfg);

} // namespace hevsim::energy
