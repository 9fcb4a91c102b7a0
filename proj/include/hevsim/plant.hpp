#pragma once

namespace hevsim::plant {

struct VehicleParams {
  double mass_kg = 1530.0;
  double road_a_n = 140.0;          // constant road load [N]
  double road_b_npmps = 1.2;        // speed-linear road load [N/(m/s)]
  double road_c_npm2ps2 = 0.45;     // aero term [N/(m/s)^2]
  double driveline_eff = 0.92;
  double regen_fraction = 0.5;      // share of negative wheel power recovered
  double regen_power_limit_w = 30000.0;
};

struct ThermalParams {
  double coolant_heat_capacity_jpk = 60000.0;
  double cabin_heat_capacity_jpk = 80000.0;
  double cabin_ua_wpk = 40.0;
  double radiator_ua_wpk = 300.0;
  double thermostat_open_c = 80.0;
  double engine_heat_fraction = 0.30; // share of fuel LHV power into coolant
};

struct PowertrainParams {
  double e_batt_j = 4.32e6;
  double soc_min = 0.25;
  double soc_max = 0.85;
  double engine_on_power_w = 4000.0; // demand above which the engine runs
  double t_cl_idle_on_c = 50.0;      // coolant floor forcing the engine on
  double t_cl_idle_off_c = 65.0;     // hysteresis release
  double eta_eng = 0.36;
  double eta_sys = 0.30;             // fuel -> battery conversion efficiency
  double lhv_jpkg = 44.0e6;
  double afr_stoich = 14.7;
  double idle_fuel_rate_kgps = 3.5e-4;
  double idle_charge_power_w = 2000.0;
};

struct PlantState {
  double t_s = 0.0;
  double v_mps = 0.0;
  double coolant_c = 85.0;
  double cabin_c = 14.0;
  double soc = 0.6;
  bool engine_on = false;
  double fuel_kg = 0.0;          // cumulative, monotone
  double mdot_air_kgps = 0.0;    // engine intake air flow over the last step
};

/// Signed electrical/mechanical demand at the powertrain: positive power
/// through the driveline, negative capped regen.
double traction_power(double v_mps, double accel_mps2, const VehicleParams& p);

/// Rule-based power-split surrogate: engine-on logic with coolant-idle
/// hysteresis, fuel integration, SOC update. Throws SocOutOfRange when the
/// SOC would leave [0, 1].
PlantState step_powertrain(const PlantState& s, double p_dem_w, const PowertrainParams& pt,
                           double dt_s);

/// Lumped coolant/cabin energy balance, explicit Euler. Radiator path
/// opens at the thermostat threshold; the heater core extraction equals
/// the discharge air heating power in fresh-air mode.
PlantState step_thermal(const PlantState& s, double q_engine_w, double q_heater_w,
                        double ambient_c, const ThermalParams& tp, double dt_s);

double engine_heat(double fuel_power_w, const ThermalParams& tp);

} // namespace hevsim::plant
