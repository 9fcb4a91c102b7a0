#pragma once

#include <vector>

namespace hevsim::traffic {

enum class SignalState { Green, Red };

/// Fixed-time signalized intersection with a deterministic queue model.
/// The queue resets to initial_queue at the start of every red phase,
/// grows at arrival_rate during red and drains at discharge_rate during
/// green.
struct Intersection {
  int id = 0;
  double position_m = 0.0;
  double cycle_s = 90.0;
  double green_offset_s = 0.0;    // start of green within the cycle
  double green_duration_s = 40.0;
  double initial_queue = 0.0;     // vehicles present at each red start
  double discharge_rate_vps = 0.5;
  double discharge_headway_m = 7.0; // road length occupied per queued vehicle
  double arrival_rate_vps = 0.0;  // queue growth during red
};

struct Corridor {
  double length_m = 0.0;
  double speed_limit_mps = 17.9;
  std::vector<Intersection> intersections;

  /// Throws ConfigError when any field invariant is violated.
  void validate() const;
};

/// Time interval during which the ego vehicle can pass the intersection:
/// green phase shortened at the front by the queue-discharge delay.
struct GreenWindow {
  int intersection_id = 0;
  double open_s = 0.0;
  double close_s = 0.0;

  bool empty() const { return open_s >= close_s; }
};

/// Uniformly sampled speed trace. Speeds are piecewise linear between
/// samples; position_at integrates that exactly.
struct SpeedProfile {
  double dt_s = 1.0;
  double origin_time_s = 0.0;
  std::vector<double> speeds_mps;

  double end_time_s() const {
    return origin_time_s + (speeds_mps.empty() ? 0.0 : dt_s * double(speeds_mps.size() - 1));
  }
  double speed_at(double t) const;
  double position_at(double t) const;
  /// Last time the vehicle is at or before `pos` (crossing instant; for a
  /// stop at `pos` this is the departure moment).
  double crossing_time(double pos) const;
};

struct PlannerLimits {
  double accel_max_mps2 = 1.5;
  double decel_max_mps2 = 2.5;
  double v_cruise_mps = 17.9;
  double v_min_glide_mps = 4.5;
  int horizon_cycles = 8;
};

SignalState signal_state(const Intersection& x, double t);
double queue_length(const Intersection& x, double t);
GreenWindow green_window(const Intersection& x, int cycle_index);

/// Signal-aware trapezoidal speed planner (cruise / speed up / slow down /
/// stop per intersection). Throws InfeasibleCorridor when no green window
/// is reachable within limits.horizon_cycles.
SpeedProfile plan_eco_trajectory(const Corridor& c, double v0, double t0,
                                 const PlannerLimits& lim);

/// No-preview driver: holds cruise speed, brakes only within kinematic
/// stopping distance of a red signal or queue tail, departs when the queue
/// ahead has discharged under a green.
SpeedProfile plan_normal_trajectory(const Corridor& c, double v0, double t0,
                                    const PlannerLimits& lim);

} // namespace hevsim::traffic
