#include "hevsim/hvac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "hevsim/errors.hpp"

namespace hevsim::hvac {

double vent_air_temp(double setpoint_c, double coolant_c, const AlphaCoeffs& a) {
  return a.a1 * setpoint_c + a.a2 * (setpoint_c - a.setpoint_floor_c) * coolant_c +
         a.a3 * setpoint_c * setpoint_c + a.a4;
}

double dahp(double vent_c, double ambient_c, double flow_kgps, double cp_jpkgk) {
  return cp_jpkgk * (vent_c - ambient_c) * flow_kgps;
}

namespace {

double interp_table(const std::vector<std::pair<double, double>>& pts, double x) {
  if (x <= pts.front().first) return pts.front().second;
  if (x >= pts.back().first) return pts.back().second;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (x <= pts[i + 1].first) {
      double f = (x - pts[i].first) / (pts[i + 1].first - pts[i].first);
      return pts[i].second + f * (pts[i + 1].second - pts[i].second);
    }
  }
  return pts.back().second;
}

} // namespace

double beta(double v_mps, const BetaSchedule& sched) {
  return sched.scale * interp_table(sched.points, v_mps);
}

double blower_flow(double pct, const BlowerMap& map) {
  if (pct < kBlowerMin - 1e-12 || pct > kBlowerMax + 1e-12)
    throw OutOfRange("blower command " + std::to_string(pct) + "% outside [" +
                     std::to_string(kBlowerMin) + ", " + std::to_string(kBlowerMax) + "]");
  return interp_table(map.points, pct);
}

double blower_pct_for_flow(double flow_kgps, const BlowerMap& map) {
  const auto& pts = map.points;
  if (flow_kgps <= pts.front().second) return pts.front().first;
  if (flow_kgps >= pts.back().second) return pts.back().first;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (flow_kgps <= pts[i + 1].second) {
      double f = (flow_kgps - pts[i].second) / (pts[i + 1].second - pts[i].second);
      return pts[i].first + f * (pts[i + 1].first - pts[i].first);
    }
  }
  return pts.back().first;
}

HvacCommand constant_heating() { return HvacCommand{23.0, 40.0}; }

double target_dahp(double coolant_c, double ambient_c, const AlphaCoeffs& a,
                   const BlowerMap& map, double cp_jpkgk) {
  HvacCommand base = constant_heating();
  return dahp(vent_air_temp(base.setpoint_c, coolant_c, a), ambient_c,
              blower_flow(base.blower_pct, map), cp_jpkgk);
}

namespace {

struct Candidate {
  double setpoint_c = 0.0;
  double flow = 0.0;
  double power = 0.0;
  double cost = 0.0;
};

// Best (setpoint, flow) for one tracking term: setpoint gridded, optimal
// flow closed-form and clamped to the map range. An unclamped flow tracks
// the reference exactly, so its residual is zero by construction.
Candidate solve_tracking_term(double p_ref, double coolant_c, double ambient_c,
                              const MpcConfig& cfg, const AlphaCoeffs& a, const BlowerMap& map,
                              double cp) {
  Candidate best;
  bool have = false;
  for (double sp = kSetpointMin; sp <= kSetpointMax + 1e-9; sp += cfg.setpoint_grid_step_c) {
    double setpoint = std::min(sp, kSetpointMax);
    double dT = vent_air_temp(setpoint, coolant_c, a) - ambient_c;
    Candidate c;
    c.setpoint_c = setpoint;
    if (dT <= 0.0) {
      // cannot heat at this setpoint; best effort is minimum flow
      c.flow = map.min_flow();
      c.power = cp * dT * c.flow;
      double r = c.power - p_ref;
      c.cost = r * r;
    } else {
      double flow_star = p_ref / (cp * dT);
      if (flow_star >= map.min_flow() && flow_star <= map.max_flow()) {
        c.flow = flow_star;
        c.power = p_ref;
        c.cost = 0.0;
      } else {
        c.flow = std::clamp(flow_star, map.min_flow(), map.max_flow());
        c.power = cp * dT * c.flow;
        double r = c.power - p_ref;
        c.cost = r * r;
      }
    }
    // tie-breaking: lower cost, then lower flow, then lower setpoint
    if (!have || c.cost < best.cost ||
        (c.cost == best.cost &&
         (c.flow < best.flow || (c.flow == best.flow && c.setpoint_c < best.setpoint_c)))) {
      best = c;
      have = true;
    }
  }
  return best;
}

// Full grid DP across the horizon for the rate-coupled extension.
MpcResult solve_with_rate_penalty(double coolant_c, double ambient_c,
                                  std::span<const double> preview, const MpcConfig& cfg,
                                  const BetaSchedule& sched, const AlphaCoeffs& a,
                                  const BlowerMap& map, double cp, const HvacCommand& prev,
                                  double p_target) {
  std::vector<double> sps, bls;
  for (double sp = kSetpointMin; sp <= kSetpointMax + 1e-9; sp += cfg.setpoint_grid_step_c)
    sps.push_back(std::min(sp, kSetpointMax));
  for (double bl = kBlowerMin; bl <= kBlowerMax + 1e-9; bl += 2.5)
    bls.push_back(std::min(bl, kBlowerMax));

  const std::size_t ns = sps.size(), nb = bls.size(), n_states = ns * nb;
  auto rate_cost = [&](double sp0, double bl0, double sp1, double bl1) {
    double dsp = sp1 - sp0;
    double dbl = 0.1 * (bl1 - bl0);
    return cfg.rate_penalty * (dsp * dsp + dbl * dbl);
  };
  auto term_cost = [&](std::size_t st, double b) {
    double dT = vent_air_temp(sps[st / nb], coolant_c, a) - ambient_c;
    double p = cp * dT * blower_flow(bls[st % nb], map);
    double r = p - b * p_target;
    return r * r;
  };

  std::size_t steps = preview.size();
  std::vector<double> cost(n_states), next_cost(n_states);
  // backward DP
  for (std::size_t st = 0; st < n_states; ++st)
    cost[st] = term_cost(st, beta(preview[steps - 1], sched));
  for (std::size_t i = steps - 1; i-- > 0;) {
    next_cost.swap(cost);
    double b = beta(preview[i], sched);
    for (std::size_t st = 0; st < n_states; ++st) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t st2 = 0; st2 < n_states; ++st2) {
        double c = next_cost[st2] +
                   rate_cost(sps[st / nb], bls[st % nb], sps[st2 / nb], bls[st2 % nb]);
        best = std::min(best, c);
      }
      cost[st] = term_cost(st, b) + best;
    }
  }
  std::size_t arg = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t st = 0; st < n_states; ++st) {
    double c = cost[st] + rate_cost(prev.setpoint_c, prev.blower_pct, sps[st / nb], bls[st % nb]);
    if (c < best) {
      best = c;
      arg = st;
    }
  }
  MpcResult out;
  out.command = {sps[arg / nb], bls[arg % nb]};
  double dT = vent_air_temp(out.command.setpoint_c, coolant_c, a) - ambient_c;
  out.predicted_dahp_w = cp * dT * blower_flow(out.command.blower_pct, map);
  out.cost = best;
  return out;
}

} // namespace

MpcResult mpc_step(double coolant_meas_c, double ambient_c, std::span<const double> speed_preview,
                   const MpcConfig& cfg, const BetaSchedule& sched, const AlphaCoeffs& a,
                   const BlowerMap& map, double cp_jpkgk, const HvacCommand& prev) {
  MpcResult out;
  if (speed_preview.empty()) throw DomainError("mpc_step requires a nonempty speed preview");

  // heating impossible anywhere in the box -> flagged minimum command
  bool heatable = false;
  for (double sp = kSetpointMin; sp <= kSetpointMax + 1e-9; sp += cfg.setpoint_grid_step_c) {
    if (vent_air_temp(std::min(sp, kSetpointMax), coolant_meas_c, a) > ambient_c) {
      heatable = true;
      break;
    }
  }
  if (!heatable) {
    out.command = {kSetpointMin, kBlowerMin};
    out.degenerate_vent = true;
    out.predicted_dahp_w =
        dahp(vent_air_temp(kSetpointMin, coolant_meas_c, a), ambient_c, map.min_flow(), cp_jpkgk);
    return out;
  }

  double p_target = target_dahp(coolant_meas_c, ambient_c, a, map, cp_jpkgk);

  if (cfg.rate_penalty > 0.0)
    return solve_with_rate_penalty(coolant_meas_c, ambient_c, speed_preview, cfg, sched, a, map,
                                   cp_jpkgk, prev, p_target);

  // independent per-step problems; the applied command is the i = 0 term
  double b0 = beta(speed_preview[0], sched);
  Candidate c =
      solve_tracking_term(b0 * p_target, coolant_meas_c, ambient_c, cfg, a, map, cp_jpkgk);
  out.command = {c.setpoint_c, blower_pct_for_flow(c.flow, map)};
  out.predicted_dahp_w = c.power;
  out.cost = c.cost;
  return out;
}

AlphaFit fit_alpha(const std::vector<AlphaSample>& samples, double setpoint_floor_c) {
  const std::size_t n = samples.size();
  if (n < 4) throw RankDeficient("fit_alpha needs at least 4 samples, got " + std::to_string(n));
  Eigen::MatrixXd m(n, 4);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = samples[i];
    m(Eigen::Index(i), 0) = s.setpoint_c;
    m(Eigen::Index(i), 1) = (s.setpoint_c - setpoint_floor_c) * s.coolant_c;
    m(Eigen::Index(i), 2) = s.setpoint_c * s.setpoint_c;
    m(Eigen::Index(i), 3) = 1.0;
    y(Eigen::Index(i)) = s.vent_c;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  if (qr.rank() < 4)
    throw RankDeficient("vent-air regression matrix is rank deficient (rank " +
                        std::to_string(qr.rank()) + ")");
  Eigen::VectorXd sol = qr.solve(y);
  AlphaFit fit;
  fit.coeffs = {sol(0), sol(1), sol(2), sol(3), setpoint_floor_c};
  fit.rms_c = std::sqrt((m * sol - y).squaredNorm() / double(n));
  return fit;
}

BetaCalibration calibrate_beta(const BetaSchedule& base,
                               const std::function<double(const BetaSchedule&)>& eco_mean_dahe,
                               double const_mean_dahe_j, double rel_tol) {
  if (!(const_mean_dahe_j > 0.0))
    throw DomainError("constant-heating mean DAHE must be positive for calibration");

  BetaCalibration cal;
  cal.mean_const_dahe_j = const_mean_dahe_j;
  auto gap_at = [&](double scale) {
    BetaSchedule s = base;
    s.scale = scale;
    ++cal.evaluations;
    return eco_mean_dahe(s) - const_mean_dahe_j;
  };

  // start at the nominal scale: exact fixed point when beta == 1 already
  double g1 = gap_at(1.0);
  if (std::abs(g1) <= rel_tol * const_mean_dahe_j) {
    cal.schedule = base;
    cal.schedule.scale = 1.0;
    cal.mean_eco_dahe_j = g1 + const_mean_dahe_j;
    cal.gap_rel = g1 / const_mean_dahe_j;
    return cal;
  }

  double lo = 0.5, hi = 2.0;
  double g_lo = gap_at(lo);
  double g_hi = gap_at(hi);
  double best_scale = 1.0, best_gap = g1;
  auto consider = [&](double scale, double gap) {
    if (std::abs(gap) < std::abs(best_gap)) {
      best_scale = scale;
      best_gap = gap;
    }
  };
  consider(lo, g_lo);
  consider(hi, g_hi);
  if (g_lo > 0.0 || g_hi < 0.0) {
    // eco DAHE is monotone nondecreasing in scale; no sign change in bracket
    throw NoBracket("calibration gap not bracketed in scale [0.5, 2.0]; best achieved " +
                    std::to_string(100.0 * best_gap / const_mean_dahe_j) + "%");
  }
  if (g1 < 0.0)
    lo = 1.0;
  else
    hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    double g = gap_at(mid);
    consider(mid, g);
    if (std::abs(g) <= rel_tol * const_mean_dahe_j) break;
    if (g < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-9) break;
  }
  if (std::abs(best_gap) > rel_tol * const_mean_dahe_j)
    throw NoBracket("calibration could not reach the tolerance; best achieved " +
                    std::to_string(100.0 * best_gap / const_mean_dahe_j) + "%");
  cal.schedule = base;
  cal.schedule.scale = best_scale;
  cal.mean_eco_dahe_j = best_gap + const_mean_dahe_j;
  cal.gap_rel = best_gap / const_mean_dahe_j;
  return cal;
}

} // namespace hevsim::hvac
