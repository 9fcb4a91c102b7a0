#pragma once

// Shared oracles and generators for the test suites. Everything here is
// deliberately independent of the library's internal helpers: positions
// come from a plain trapezoid sum, signal phases from re-derived modular
// arithmetic, windows from brute-force scanning.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "hevsim/traffic.hpp"

namespace test_support {

constexpr double kMphToMps = 0.44704;
// Planner contract: crossings keep >= this margin inside the green window.
constexpr double kPlannerMargin = 1.0;

inline std::string config_dir() { return HEVSIM_CONFIG_DIR; }

inline std::vector<double> cum_positions(const hevsim::traffic::SpeedProfile& p) {
  std::vector<double> x(p.speeds_mps.size(), 0.0);
  for (std::size_t k = 1; k < x.size(); ++k)
    x[k] = x[k - 1] + 0.5 * (p.speeds_mps[k - 1] + p.speeds_mps[k]) * p.dt_s;
  return x;
}

// Last instant the vehicle is at or before `pos` (linear speed between
// samples). For a stop held at `pos`, this is the departure moment.
inline double crossing_time_oracle(const hevsim::traffic::SpeedProfile& p, double pos) {
  auto x = cum_positions(p);
  double t = p.origin_time_s;
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    if (x[k] <= pos + 1e-6 && x[k + 1] >= pos) {
      double v0 = p.speeds_mps[k];
      double v1 = p.speeds_mps[k + 1];
      double f = 1.0;
      if (x[k + 1] - x[k] > 1e-12) {
        // solve v0*f + (v1-v0)*f^2/2 = pos - x[k]
        double a = 0.5 * (v1 - v0);
        double b = v0;
        double c = x[k] - pos;
        if (std::abs(a) < 1e-12) {
          f = b > 1e-12 ? -c / b : 1.0;
        } else {
          double disc = std::max(0.0, b * b - 4.0 * a * c);
          double r1 = (-b + std::sqrt(disc)) / (2.0 * a);
          f = (r1 >= -1e-9 && r1 <= 1.0 + 1e-9) ? r1 : (-b - std::sqrt(disc)) / (2.0 * a);
        }
        f = std::clamp(f, 0.0, 1.0);
      }
      t = p.origin_time_s + (double(k) + f) * p.dt_s;
    }
  }
  return t;
}

inline bool green_oracle(const hevsim::traffic::Intersection& x, double t) {
  double m = std::fmod(t, x.cycle_s);
  if (m < 0) m += x.cycle_s;
  double phase = std::fmod(m - x.green_offset_s, x.cycle_s);
  if (phase < 0) phase += x.cycle_s;
  return phase < x.green_duration_s;
}

inline double queue_oracle(const hevsim::traffic::Intersection& x, double t) {
  double m = std::fmod(t, x.cycle_s);
  if (m < 0) m += x.cycle_s;
  double phase = std::fmod(m - x.green_offset_s, x.cycle_s);
  if (phase < 0) phase += x.cycle_s;
  double red_len = x.cycle_s - x.green_duration_s;
  if (phase < x.green_duration_s) {
    double q0 = x.initial_queue + x.arrival_rate_vps * red_len;
    return std::max(0.0, q0 - x.discharge_rate_vps * phase);
  }
  return x.initial_queue + x.arrival_rate_vps * (phase - x.green_duration_s);
}

struct PassageCheck {
  int violations = 0;
  std::vector<std::string> details;
};

// Green-passage invariant: integrated profile crosses each intersection
// during green with the queue ahead fully discharged.
inline PassageCheck check_green_passage(const hevsim::traffic::Corridor& c,
                                        const hevsim::traffic::SpeedProfile& p) {
  PassageCheck out;
  for (const auto& inter : c.intersections) {
    double t = crossing_time_oracle(p, inter.position_m);
    bool green = green_oracle(inter, t);
    bool discharged = queue_oracle(inter, t) <= 1e-6;
    if (!green || !discharged) {
      ++out.violations;
      out.details.push_back("intersection " + std::to_string(inter.id) + " crossed at t=" +
                            std::to_string(t) + (green ? "" : " (red)") +
                            (discharged ? "" : " (queue present)"));
    }
  }
  return out;
}

inline bool check_kinematics(const hevsim::traffic::SpeedProfile& p, double accel_max,
                             double decel_max, double tol = 1e-9) {
  for (std::size_t k = 0; k + 1 < p.speeds_mps.size(); ++k) {
    double a = (p.speeds_mps[k + 1] - p.speeds_mps[k]) / p.dt_s;
    if (a > accel_max + tol || a < -decel_max - tol) return false;
  }
  return true;
}

struct Dwell {
  std::size_t first, last;
  double position;
};

inline std::vector<Dwell> zero_dwells(const hevsim::traffic::SpeedProfile& p) {
  auto x = cum_positions(p);
  std::vector<Dwell> out;
  bool in = false;
  Dwell d{};
  for (std::size_t k = 0; k < p.speeds_mps.size(); ++k) {
    bool z = p.speeds_mps[k] == 0.0;
    if (z && !in) {
      in = true;
      d.first = k;
      d.position = x[k];
    }
    if ((!z || k + 1 == p.speeds_mps.size()) && in) {
      d.last = z ? k : k - 1;
      out.push_back(d);
      in = false;
    }
  }
  return out;
}

// Brute-force green-window enumeration by scanning the signal and queue,
// independent of green_window(). Returns [open, close) pairs.
inline std::vector<std::pair<double, double>> windows_oracle(
    const hevsim::traffic::Intersection& x, double t_end, double scan_dt = 0.05) {
  std::vector<std::pair<double, double>> out;
  bool open = false;
  double open_t = 0.0;
  for (double t = 0.0; t <= t_end; t += scan_dt) {
    bool passable = green_oracle(x, t) && queue_oracle(x, t) <= 1e-9;
    if (passable && !open) {
      open = true;
      open_t = t;
    } else if (!passable && open) {
      out.emplace_back(open_t, t);
      open = false;
    }
  }
  if (open) out.emplace_back(open_t, t_end);
  return out;
}

// Random corridors for property tests. Window widths are either >= ~6 s
// (clearly usable) or forced empty (queue discharge exceeds the green),
// so feasibility has an unambiguous oracle.
inline hevsim::traffic::Corridor random_corridor(std::mt19937_64& rng,
                                                 bool force_infeasible = false) {
  std::uniform_int_distribution<int> n_inter(2, 5);
  std::uniform_real_distribution<double> spacing(320.0, 700.0);
  std::uniform_real_distribution<double> cycle(60.0, 130.0);
  std::uniform_real_distribution<double> green_frac(0.30, 0.55);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> rate(0.4, 0.7);

  hevsim::traffic::Corridor c;
  c.speed_limit_mps = 17.9;
  int n = n_inter(rng);
  double pos = 0.0;
  int blocked_at = force_infeasible ? int(u01(rng) * n) : -1;
  for (int i = 0; i < n; ++i) {
    pos += spacing(rng);
    hevsim::traffic::Intersection x;
    x.id = i + 1;
    x.position_m = pos;
    x.cycle_s = cycle(rng);
    x.green_duration_s = green_frac(rng) * x.cycle_s;
    x.green_offset_s = u01(rng) * (x.cycle_s - 1.0);
    x.discharge_rate_vps = rate(rng);
    if (i == blocked_at) {
      // queue never discharges inside the green
      x.initial_queue = std::ceil(x.green_duration_s * x.discharge_rate_vps) + 2.0;
    } else {
      double max_q = std::max(0.0, (x.green_duration_s - 7.0) * x.discharge_rate_vps);
      x.initial_queue = std::floor(u01(rng) * max_q);
    }
    c.intersections.push_back(x);
  }
  c.length_m = pos + 150.0;
  return c;
}

} // namespace test_support
