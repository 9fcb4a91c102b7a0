#include "hevsim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hevsim/errors.hpp"

namespace hevsim::plant {

double traction_power(double v_mps, double accel_mps2, const VehicleParams& p) {
  double road = p.road_a_n + p.road_b_npmps * v_mps + p.road_c_npm2ps2 * v_mps * v_mps;
  double wheel = (road + p.mass_kg * accel_mps2) * v_mps;
  if (wheel >= 0.0) return wheel / p.driveline_eff;
  return std::max(wheel * p.regen_fraction, -p.regen_power_limit_w);
}

PlantState step_powertrain(const PlantState& s, double p_dem_w, const PowertrainParams& pt,
                           double dt_s) {
  PlantState n = s;
  bool demand_on = p_dem_w > pt.engine_on_power_w;
  bool soc_on = s.soc < pt.soc_min;
  bool cold_on = s.coolant_c < pt.t_cl_idle_on_c;
  bool heat_hold = s.engine_on && s.coolant_c < pt.t_cl_idle_off_c;
  n.engine_on = demand_on || soc_on || cold_on || heat_hold;

  double fuel_rate = 0.0;
  double p_batt = 0.0; // discharge positive
  if (n.engine_on) {
    if (demand_on) {
      fuel_rate = p_dem_w / pt.eta_eng / pt.lhv_jpkg;
    } else {
      // idling for heat / charge sustain: fixed fuel rate, battery charged
      fuel_rate = pt.idle_fuel_rate_kgps;
      if (s.soc < pt.soc_max) p_batt -= pt.idle_charge_power_w;
      if (p_dem_w < 0.0) p_batt += p_dem_w; // regen still charges
    }
  } else {
    p_batt = p_dem_w;
  }

  n.fuel_kg = s.fuel_kg + fuel_rate * dt_s;
  n.mdot_air_kgps = fuel_rate * pt.afr_stoich; // stoichiometric operation
  n.soc = s.soc - p_batt * dt_s / pt.e_batt_j;
  if (n.soc < 0.0 || n.soc > 1.0)
    throw SocOutOfRange("SOC left [0,1]: " + std::to_string(n.soc) +
                        " (scenario is mis-sized for the battery)");
  return n;
}

PlantState step_thermal(const PlantState& s, double q_engine_w, double q_heater_w,
                        double ambient_c, const ThermalParams& tp, double dt_s) {
  PlantState n = s;
  double q_radiator =
      s.coolant_c >= tp.thermostat_open_c ? tp.radiator_ua_wpk * (s.coolant_c - ambient_c) : 0.0;
  n.coolant_c =
      s.coolant_c + dt_s * (q_engine_w - q_radiator - q_heater_w) / tp.coolant_heat_capacity_jpk;
  n.cabin_c = s.cabin_c + dt_s * (q_heater_w - tp.cabin_ua_wpk * (s.cabin_c - ambient_c)) /
                              tp.cabin_heat_capacity_jpk;
  return n;
}

double engine_heat(double fuel_power_w, const ThermalParams& tp) {
  return tp.engine_heat_fraction * fuel_power_w;
}

} // namespace hevsim::plant
