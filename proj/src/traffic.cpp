#include "hevsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hevsim/errors.hpp"

namespace hevsim::traffic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// In-window crossing margin; planner contract, mirrored by the tests.
constexpr double kWindowMargin = 1.0;
constexpr double kTiny = 1e-9;

double positive_fmod(double a, double m) {
  double r = std::fmod(a, m);
  return r < 0.0 ? r + m : r;
}

// Solves x0 + v0*f + (v1-v0)*f^2/2 = pos for f in [0,1] (fraction of one
// step with linear speed v0 -> v1).
double step_fraction_at(double x0, double v0, double v1, double pos) {
  double a = 0.5 * (v1 - v0);
  double b = v0;
  double c = x0 - pos;
  double f;
  if (std::abs(a) < 1e-12) {
    f = b > kTiny ? -c / b : 1.0;
  } else {
    double disc = std::max(0.0, b * b - 4.0 * a * c);
    double r1 = (-b + std::sqrt(disc)) / (2.0 * a);
    double r2 = (-b - std::sqrt(disc)) / (2.0 * a);
    f = (r1 >= -1e-9 && r1 <= 1.0 + 1e-9) ? r1 : r2;
  }
  return std::clamp(f, 0.0, 1.0);
}

} // namespace

void Corridor::validate() const {
  if (!(length_m > 0.0))
    throw ConfigError("corridor length must be positive");
  if (!(speed_limit_mps > 0.0))
    throw ConfigError("corridor speed limit must be positive");
  double prev_pos = 0.0;
  for (const auto& x : intersections) {
    const std::string tag = "intersection " + std::to_string(x.id) + ": ";
    if (!(x.cycle_s > 0.0)) throw ConfigError(tag + "cycle must be positive");
    if (!(x.green_offset_s >= 0.0 && x.green_offset_s < x.cycle_s))
      throw ConfigError(tag + "green_offset must lie in [0, cycle)");
    if (!(x.green_duration_s > 0.0 && x.green_duration_s < x.cycle_s))
      throw ConfigError(tag + "green_duration must lie in (0, cycle)");
    if (!(x.initial_queue >= 0.0))
      throw ConfigError(tag + "initial_queue must be >= 0");
    if (!(x.discharge_rate_vps > 0.0))
      throw ConfigError(tag + "discharge_rate must be > 0");
    if (!(x.discharge_headway_m >= 0.0))
      throw ConfigError(tag + "discharge_headway must be >= 0");
    if (!(x.arrival_rate_vps >= 0.0))
      throw ConfigError(tag + "arrival_rate must be >= 0");
    if (!(x.position_m > prev_pos))
      throw ConfigError(tag + "positions must be strictly increasing and > 0");
    if (!(x.position_m <= length_m))
      throw ConfigError(tag + "position exceeds corridor length");
    prev_pos = x.position_m;
  }
}

double SpeedProfile::speed_at(double t) const {
  if (speeds_mps.empty()) return 0.0;
  double s = (t - origin_time_s) / dt_s;
  if (s <= 0.0) return speeds_mps.front();
  if (s >= double(speeds_mps.size() - 1)) return speeds_mps.back();
  std::size_t k = std::size_t(s);
  double f = s - double(k);
  return speeds_mps[k] + f * (speeds_mps[k + 1] - speeds_mps[k]);
}

double SpeedProfile::position_at(double t) const {
  if (speeds_mps.size() < 2) return 0.0;
  double x = 0.0;
  double s = (t - origin_time_s) / dt_s;
  std::size_t last = speeds_mps.size() - 1;
  std::size_t full = s <= 0.0 ? 0 : std::min(std::size_t(s), last);
  for (std::size_t k = 0; k < full; ++k)
    x += 0.5 * (speeds_mps[k] + speeds_mps[k + 1]) * dt_s;
  if (s > double(last)) {
    x += speeds_mps.back() * (s - double(last)) * dt_s;
  } else if (s > double(full)) {
    double f = s - double(full);
    double v0 = speeds_mps[full];
    double v1 = speeds_mps[full + 1];
    x += (v0 * f + 0.5 * (v1 - v0) * f * f) * dt_s;
  }
  return x;
}

double SpeedProfile::crossing_time(double pos) const {
  if (speeds_mps.size() < 2) return origin_time_s;
  double x = 0.0;
  double t_cross = origin_time_s;
  bool seen = false;
  for (std::size_t k = 0; k + 1 < speeds_mps.size(); ++k) {
    double v0 = speeds_mps[k];
    double v1 = speeds_mps[k + 1];
    double seg = 0.5 * (v0 + v1) * dt_s;
    double x_next = x + seg;
    if (!seen && x <= pos + 1e-6 && x_next >= pos) {
      t_cross = origin_time_s + (double(k) + step_fraction_at(x, v0, v1, pos)) * dt_s;
      seen = true;
    } else if (seen && seg <= kTiny && x <= pos + 1e-6) {
      // still dwelling at pos: the crossing is the departure instant
      t_cross = origin_time_s + double(k + 1) * dt_s;
    }
    x = x_next;
  }
  return t_cross;
}

SignalState signal_state(const Intersection& x, double t) {
  double phase = positive_fmod(positive_fmod(t, x.cycle_s) - x.green_offset_s, x.cycle_s);
  return phase < x.green_duration_s ? SignalState::Green : SignalState::Red;
}

double queue_length(const Intersection& x, double t) {
  double phase = positive_fmod(positive_fmod(t, x.cycle_s) - x.green_offset_s, x.cycle_s);
  double red_len = x.cycle_s - x.green_duration_s;
  if (phase < x.green_duration_s) {
    double at_green_start = x.initial_queue + x.arrival_rate_vps * red_len;
    return std::max(0.0, at_green_start - x.discharge_rate_vps * phase);
  }
  return x.initial_queue + x.arrival_rate_vps * (phase - x.green_duration_s);
}

GreenWindow green_window(const Intersection& x, int cycle_index) {
  double green_start = double(cycle_index) * x.cycle_s + x.green_offset_s;
  double green_end = green_start + x.green_duration_s;
  double red_len = x.cycle_s - x.green_duration_s;
  double queue_at_start = x.initial_queue + x.arrival_rate_vps * red_len;
  double discharge_s = queue_at_start / x.discharge_rate_vps;
  GreenWindow w;
  w.intersection_id = x.id;
  w.close_s = green_end;
  w.open_s = discharge_s >= x.green_duration_s ? green_end : green_start + discharge_s;
  return w;
}

namespace {

// Grid-native velocity trace under construction. Every kink sits on the
// 1 s sample grid, so the emitted profile IS the planned motion and its
// trapezoidal position integral is exact.
struct StepPlan {
  double dt;
  double t0;
  std::vector<double> v;
  double x = 0.0; // exact position at the last sample

  StepPlan(double dt_, double t0_, double v0) : dt(dt_), t0(t0_) { v.push_back(v0); }
  double time() const { return t0 + dt * double(v.size() - 1); }
  double speed() const { return v.back(); }
  void push(double v_next) {
    x += 0.5 * (v.back() + v_next) * dt;
    v.push_back(v_next);
  }
};

// Constant-rate ramp toward v_target: full-rate steps plus one partial
// step landing exactly on v_target.
void append_ramp(StepPlan& p, double v_target, const PlannerLimits& lim) {
  int guard = 0;
  while (std::abs(p.speed() - v_target) > kTiny) {
    double dv = v_target - p.speed();
    double step = dv > 0.0 ? std::min(dv, lim.accel_max_mps2 * p.dt)
                           : std::max(dv, -lim.decel_max_mps2 * p.dt);
    p.push(p.speed() + step);
    if (++guard > 100000) throw DomainError("ramp did not converge");
  }
}

// Arrival time (relative to start) at distance d when ramping from v0 to
// v_target and holding. Evaluation only; +inf when the motion stalls.
double arrival_time(double v0, double d, double v_target, const PlannerLimits& lim,
                    double dt) {
  if (d <= 0.0) return 0.0;
  double v = v0;
  double x = 0.0;
  double t = 0.0;
  for (int guard = 0; guard < 1000000; ++guard) {
    double v_next = v;
    if (std::abs(v - v_target) > kTiny) {
      double dv = v_target - v;
      v_next = v + (dv > 0.0 ? std::min(dv, lim.accel_max_mps2 * dt)
                             : std::max(dv, -lim.decel_max_mps2 * dt));
    } else if (v <= kTiny) {
      return kInf;
    }
    double seg = 0.5 * (v + v_next) * dt;
    if (x + seg >= d)
      return t + step_fraction_at(x, v, v_next, d) * dt;
    x += seg;
    t += dt;
    v = v_next;
  }
  return kInf;
}

// Monotone solve (arrival decreasing in hold speed) for the hold speed
// whose arrival time at distance d equals t_target.
double solve_target_speed(double v0, double d, double t_target, const PlannerLimits& lim,
                          double dt) {
  double lo = lim.v_min_glide_mps;
  double hi = lim.v_cruise_mps;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    if (arrival_time(v0, d, mid, lim, dt) > t_target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Ramp to v_target and hold until position reaches x_bar. Returns the
// exact crossing time (possibly inside the ramp).
double append_until_position(StepPlan& p, double x_bar, double v_target,
                             const PlannerLimits& lim) {
  std::size_t k_start = p.v.size() - 1;
  double x_start = p.x;
  append_ramp(p, v_target, lim);
  int guard = 0;
  while (p.x < x_bar) {
    if (p.speed() <= kTiny)
      throw InfeasibleCorridor("planner stalled before reaching target position");
    p.push(p.speed());
    if (++guard > 1000000) throw DomainError("hold segment did not converge");
  }
  // locate the crossing inside the appended span
  double x = x_start;
  for (std::size_t k = k_start; k + 1 < p.v.size(); ++k) {
    double seg = 0.5 * (p.v[k] + p.v[k + 1]) * p.dt;
    if (x < x_bar && x + seg >= x_bar)
      return p.t0 + (double(k) + step_fraction_at(x, p.v[k], p.v[k + 1], x_bar)) * p.dt;
    x += seg;
  }
  return p.time();
}

// Deceleration tail from v_g to exactly 0 covering exactly `dist`: the
// max-decel schedule delayed by a continuous shift, distance monotone in
// the shift, solved by bisection. One sample per step, drops <= decel.
std::vector<double> stop_tail_schedule(double v_g, double shift, int n, double decel,
                                       double dt) {
  std::vector<double> w(std::size_t(n), 0.0);
  for (int j = 1; j <= n; ++j)
    w[std::size_t(j - 1)] = std::clamp(v_g - (double(j) - shift) * decel * dt, 0.0, v_g);
  w.back() = 0.0;
  return w;
}

double tail_distance(double v_g, const std::vector<double>& w, double dt) {
  double x = 0.0;
  double prev = v_g;
  for (double s : w) {
    x += 0.5 * (prev + s) * dt;
    prev = s;
  }
  return x;
}

struct StopPlanResult {
  bool ok = false;
  double stop_time = 0.0; // grid instant at which v == 0 at the target
};

// Ramp to glide speed, hold for hold_steps, then a stop tail landing at
// exactly `dist` ahead. Leaves `p` untouched on geometric failure.
StopPlanResult append_stop(StepPlan& p, double dist, double glide_speed, int hold_steps,
                           const PlannerLimits& lim) {
  StopPlanResult res;
  if (dist <= 0.0 || glide_speed <= kTiny) return res;
  StepPlan trial = p;
  double x_bar = p.x + dist;
  append_ramp(trial, glide_speed, lim);
  double ramp_dist = trial.x - p.x;
  double hold_dist = double(hold_steps) * glide_speed * p.dt;
  double tail_need = dist - ramp_dist - hold_dist;

  const int n = int(std::ceil(glide_speed / (lim.decel_max_mps2 * p.dt))) + 3;
  const double shift_max = double(n) - glide_speed / (lim.decel_max_mps2 * p.dt);
  double tail_min =
      tail_distance(glide_speed, stop_tail_schedule(glide_speed, 0.0, n, lim.decel_max_mps2, p.dt), p.dt);
  double tail_max = tail_distance(
      glide_speed, stop_tail_schedule(glide_speed, shift_max, n, lim.decel_max_mps2, p.dt), p.dt);
  if (tail_need < tail_min - kTiny || tail_need > tail_max + kTiny) return res;
  tail_need = std::clamp(tail_need, tail_min, tail_max);

  double lo = 0.0, hi = shift_max;
  for (int it = 0; it < 80; ++it) {
    double mid = 0.5 * (lo + hi);
    double d_mid = tail_distance(
        glide_speed, stop_tail_schedule(glide_speed, mid, n, lim.decel_max_mps2, p.dt), p.dt);
    if (d_mid < tail_need)
      lo = mid;
    else
      hi = mid;
  }
  auto tail = stop_tail_schedule(glide_speed, 0.5 * (lo + hi), n, lim.decel_max_mps2, p.dt);

  for (int h = 0; h < hold_steps; ++h) trial.push(glide_speed);
  for (double s : tail) trial.push(s);
  trial.x = x_bar; // solver residual is ~1e-10 m; pin the landing exactly
  res.ok = true;
  res.stop_time = trial.time();
  p = std::move(trial);
  return res;
}

// Stop at `dist` ahead with the full stop instant as close to (and not
// after) t_stop_target as the hold-step quantization and the distance
// geometry allow. Feasible hold counts form an interval in h.
StopPlanResult append_stop_near(StepPlan& p, double dist, double glide_speed,
                                double t_stop_target, const PlannerLimits& lim) {
  StopPlanResult fail;
  auto feasible = [&](int h) {
    StepPlan trial = p;
    return append_stop(trial, dist, glide_speed, h, lim).ok;
  };
  StepPlan ramp_probe = p;
  append_ramp(ramp_probe, glide_speed, lim);
  double ramp_dist = ramp_probe.x - p.x;
  int h_est = std::max(0, int((dist - ramp_dist) / (glide_speed * p.dt)));

  int h0 = -1;
  for (int delta = 0; delta <= 8 && h0 < 0; ++delta) {
    if (h_est - delta >= 0 && feasible(h_est - delta)) h0 = h_est - delta;
    else if (feasible(h_est + delta)) h0 = h_est + delta;
  }
  if (h0 < 0) return fail;

  int h_lo = h0;
  while (h_lo > 0 && feasible(h_lo - 1)) --h_lo;
  int h_hi = h0;
  while (feasible(h_hi + 1)) ++h_hi;

  StepPlan lo_probe = p;
  StopPlanResult lo_res = append_stop(lo_probe, dist, glide_speed, h_lo, lim);
  int h_target = h_lo + std::max(0, int((t_stop_target - lo_res.stop_time) / p.dt));
  int h_pick = std::clamp(h_target, h_lo, h_hi);
  for (int h = h_pick; h >= h_lo; --h) {
    StepPlan trial = p;
    StopPlanResult r = append_stop(trial, dist, glide_speed, h, lim);
    if (r.ok && (r.stop_time <= t_stop_target + kTiny || h == h_lo)) {
      p = std::move(trial);
      return r;
    }
  }
  return fail;
}

// Largest-hold stop: ramp to glide, cruise as long as the geometry
// allows, then stop exactly at `dist` ahead.
bool append_max_hold_stop(StepPlan& p, double dist, double glide_speed,
                          const PlannerLimits& lim) {
  return append_stop_near(p, dist, glide_speed, kInf, lim).ok;
}

// Run out to x_end and come to rest there. A profile that has already
// cleared x_end ends as-is.
void append_run_out_and_stop(StepPlan& p, double x_end, const PlannerLimits& lim) {
  double d = x_end - p.x;
  if (d <= kTiny) return;
  const double candidates[] = {lim.v_cruise_mps,
                               std::clamp(p.speed(), lim.v_min_glide_mps, lim.v_cruise_mps),
                               lim.v_min_glide_mps, 0.5 * lim.v_min_glide_mps};
  for (double vg : candidates)
    if (vg > kTiny && append_max_hold_stop(p, d, vg, lim)) return;
  append_ramp(p, 0.0, lim);
}

int first_cycle_index_at(const Intersection& x, double t) {
  return std::max(0, int(std::floor(t / x.cycle_s)) - 1);
}

} // namespace

SpeedProfile plan_eco_trajectory(const Corridor& c, double v0, double t0,
                                 const PlannerLimits& lim) {
  c.validate();
  if (!(v0 >= 0.0 && v0 <= lim.v_cruise_mps + kTiny))
    throw DomainError("initial speed outside [0, v_cruise]");
  if (!(lim.v_cruise_mps <= c.speed_limit_mps + kTiny))
    throw DomainError("v_cruise exceeds corridor speed limit");

  const double dt = 1.0;
  StepPlan plan(dt, t0, v0);

  for (const auto& inter : c.intersections) {
    double d = inter.position_m - plan.x;
    if (d <= 0.0) continue;
    const double v_e = plan.speed();
    const double t_now = plan.time();
    const double t_fast = t_now + arrival_time(v_e, d, lim.v_cruise_mps, lim, dt);
    const double t_slow = t_now + arrival_time(v_e, d, lim.v_min_glide_mps, lim, dt);
    const double t_hold = v_e > kTiny ? t_now + arrival_time(v_e, d, v_e, lim, dt) : kInf;

    struct Choice {
      bool stop = false;
      double target_speed = 0.0; // pass: hold speed to the bar
      double depart = 0.0;       // stop: grid departure instant
      StepPlan stop_plan{1.0, 0.0, 0.0};
    };
    const bool has_pace = v_e >= lim.v_min_glide_mps - kTiny;

    auto evaluate_window = [&](const GreenWindow& w, Choice& out) -> bool {
      if (w.empty()) return false;
      double wlo = std::max(w.open_s + kWindowMargin, t_fast);
      double whi = w.close_s - kWindowMargin;
      if (wlo > whi) return false;
      if (t_slow >= wlo) {
        out.stop = false;
        if (has_pace && t_hold >= wlo && t_hold <= whi)
          out.target_speed = v_e; // cruise: the current pace arrives in-window
        else if (t_fast >= wlo)
          out.target_speed = lim.v_cruise_mps; // nominal drive / speed-up
        else
          out.target_speed = solve_target_speed(v_e, d, wlo - t_now, lim, dt); // slow down
        return true;
      }
      // only reachable by stopping at the bar and departing at the open:
      // glide down early, hold, brake; stop instant as late as the glide
      // shape allows but not after (open - 2 steps)
      const double glide_candidates[] = {lim.v_min_glide_mps,
                                         std::clamp(v_e, lim.v_min_glide_mps, lim.v_cruise_mps),
                                         lim.v_cruise_mps};
      for (double glide : glide_candidates) {
        StepPlan trial = plan;
        StopPlanResult r = append_stop_near(trial, d, glide, w.open_s - 2.0 * dt, lim);
        if (!r.ok) continue;
        double depart = std::ceil(std::max(w.open_s, r.stop_time + 2.0 * dt) / dt) * dt;
        if (depart > whi) continue;
        out.stop = true;
        out.depart = depart;
        out.stop_plan = std::move(trial);
        return true;
      }
      return false;
    };

    bool planned = false;
    const int k_first = first_cycle_index_at(inter, t_now);
    const int k_last = k_first + lim.horizon_cycles;
    for (int k = k_first; k <= k_last && !planned; ++k) {
      Choice choice;
      if (!evaluate_window(green_window(inter, k), choice)) continue;

      if (!choice.stop && has_pace && choice.target_speed > v_e + kTiny && k + 1 <= k_last) {
        // a speed-up relative to the current pace: prefer gliding into the
        // next window when the pace (or a mild glide) reaches it
        GreenWindow w2 = green_window(inter, k + 1);
        if (!w2.empty()) {
          double lo2 = std::max(w2.open_s + kWindowMargin, t_fast);
          double hi2 = w2.close_s - kWindowMargin;
          if (lo2 <= hi2 && t_slow >= lo2 && t_hold <= hi2) {
            if (t_hold >= lo2)
              choice.target_speed = v_e;
            else
              choice.target_speed = solve_target_speed(v_e, d, lo2 - t_now, lim, dt);
          }
        }
      }

      if (!choice.stop) {
        append_until_position(plan, inter.position_m, choice.target_speed, lim);
      } else {
        plan = std::move(choice.stop_plan);
        while (plan.time() < choice.depart - kTiny) plan.push(0.0);
      }
      planned = true;
    }
    if (!planned)
      throw InfeasibleCorridor("no reachable green window at intersection " +
                               std::to_string(inter.id) + " within " +
                               std::to_string(lim.horizon_cycles) + " cycles");
  }

  append_run_out_and_stop(plan, c.length_m, lim);

  SpeedProfile out;
  out.dt_s = dt;
  out.origin_time_s = t0;
  out.speeds_mps = std::move(plan.v);
  return out;
}

SpeedProfile plan_normal_trajectory(const Corridor& c, double v0, double t0,
                                    const PlannerLimits& lim) {
  c.validate();
  if (!(v0 >= 0.0 && v0 <= lim.v_cruise_mps + kTiny))
    throw DomainError("initial speed outside [0, v_cruise]");

  const double dt = 1.0;
  StepPlan plan(dt, t0, v0);
  std::size_t next = 0;
  bool committed_through = false; // passed the decision point of `next`
  double max_cycle = 90.0;
  for (const auto& x : c.intersections) max_cycle = std::max(max_cycle, x.cycle_s);
  const double max_wait = double(lim.horizon_cycles) * max_cycle;

  int guard = 0;
  while (next < c.intersections.size()) {
    if (++guard > 500000) throw InfeasibleCorridor("normal planner did not converge");
    const Intersection& inter = c.intersections[next];
    if (plan.x >= inter.position_m) {
      ++next;
      committed_through = false;
      continue;
    }
    double t = plan.time();
    double v = plan.speed();

    double obstacle = kInf;
    if (!committed_through) {
      double q = queue_length(inter, t);
      bool red = signal_state(inter, t) == SignalState::Red;
      if (red || q > 0.01) obstacle = inter.position_m - q * inter.discharge_headway_m;
    }
    double gap = obstacle - plan.x;
    double brake_trigger = v * v / (2.0 * lim.decel_max_mps2) + 2.0 * v * dt + 5.0;

    if (std::isfinite(obstacle) && gap > 0.0 && gap <= brake_trigger && v > kTiny) {
      double glide = std::clamp(v, lim.v_min_glide_mps, lim.v_cruise_mps);
      StopPlanResult r = append_stop(plan, gap, glide, 0, lim);
      if (!r.ok) append_ramp(plan, 0.0, lim); // too close for an exact fit
      double x_stop = plan.x;
      double vehicles_ahead =
          std::max(0.0, (inter.position_m - x_stop) / std::max(inter.discharge_headway_m, 0.5));
      // wait for green and for the vehicles ahead to discharge
      double discharged = 0.0;
      double waited = 0.0;
      while (true) {
        double tw = plan.time();
        bool green = signal_state(inter, tw) == SignalState::Green;
        if (green && discharged + kTiny >= vehicles_ahead) break;
        if (green) discharged += inter.discharge_rate_vps * dt;
        plan.push(0.0);
        waited += dt;
        if (waited > max_wait)
          throw InfeasibleCorridor("queue at intersection " + std::to_string(inter.id) +
                                   " never discharges");
      }
      committed_through = true;
    } else {
      plan.push(std::min(lim.v_cruise_mps, v + lim.accel_max_mps2 * dt));
    }
  }

  append_run_out_and_stop(plan, c.length_m, lim);

  SpeedProfile out;
  out.dt_s = dt;
  out.origin_time_s = t0;
  out.speeds_mps = std::move(plan.v);
  return out;
}

} // namespace hevsim::traffic
