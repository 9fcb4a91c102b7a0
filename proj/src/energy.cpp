#include "hevsim/energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "hevsim/errors.hpp"

namespace hevsim::energy {

double dahe(std::span<const double> dahp_w, double dt_s) {
  double e = 0.0;
  for (double p : dahp_w) e += std::max(p, 0.0) * dt_s;
  return e;
}

double equivalent_energy(double fuel_energy_j, double delta_soc, double e_batt_j,
                         double eta_sys) {
  return fuel_energy_j + e_batt_j * delta_soc / eta_sys;
}

double fuel_energy_from_maf(std::span<const double> mdot_air_kgps,
                            std::span<const double> lambda, double afr_stoich, double lhv_jpkg,
                            double dt_s) {
  double e = 0.0;
  for (std::size_t i = 0; i < mdot_air_kgps.size(); ++i) {
    double lam = lambda[i];
    if (!(lam > 0.0))
      throw InvalidLambda("lambda sample " + std::to_string(i) + " is not positive");
    e += mdot_air_kgps[i] / (lam * afr_stoich) * lhv_jpkg * dt_s;
  }
  return e;
}

namespace {

constexpr std::array<const char*, 9> kReplayColumns = {
    "t_s",       "v_mps", "mdot_air_kgps", "lambda",       "soc",
    "engine_on", "T_ain_C", "T_amb_C",     "mdot_bl_kgps"};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

} // namespace

EnergyReport replay_log(const std::string& path, const ReplayConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open replay log: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_csv(line);
  std::array<int, kReplayColumns.size()> col{};
  col.fill(-1);
  for (std::size_t c = 0; c < kReplayColumns.size(); ++c) {
    for (std::size_t h = 0; h < header.size(); ++h)
      if (header[h] == kReplayColumns[c]) col[c] = int(h);
    if (col[c] < 0) throw SchemaError(path + ": missing column '" + kReplayColumns[c] + "'");
  }

  struct Row {
    double t, v, mdot_air, lambda, soc, engine_on, t_ain, t_amb, mdot_bl;
  };
  std::vector<Row> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv(line);
    auto field = [&](int c) -> double {
      if (c >= int(cells.size()))
        throw SchemaError(path + ":" + std::to_string(lineno) + ": short row");
      try {
        return std::stod(cells[std::size_t(c)]);
      } catch (const std::exception&) {
        throw SchemaError(path + ":" + std::to_string(lineno) + ": bad number '" +
                          cells[std::size_t(c)] + "'");
      }
    };
    Row r{field(col[0]), field(col[1]), field(col[2]), field(col[3]), field(col[4]),
          field(col[5]), field(col[6]), field(col[7]), field(col[8])};
    if (!rows.empty() && !(r.t > rows.back().t))
      throw MonotonicityError(path + ":" + std::to_string(lineno) +
                              ": timestamps must be strictly increasing");
    rows.push_back(r);
  }
  if (rows.size() < 2) throw SchemaError(path + ": needs at least two rows");

  EnergyReport rep;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const Row& r = rows[i];
    double dt = rows[i + 1].t - r.t;
    if (!(r.lambda > 0.0))
      throw InvalidLambda(path + ": lambda <= 0 at t=" + std::to_string(r.t));
    rep.fuel_energy_j += r.mdot_air / (r.lambda * cfg.afr_stoich) * cfg.lhv_jpkg * dt;
    double p = cfg.cp_jpkgk * (r.t_ain - r.t_amb) * r.mdot_bl;
    rep.e_dahe_j += std::max(p, 0.0) * dt;
    if (r.v < cfg.idle_speed_mps && r.engine_on != 0.0) rep.engine_idle_s += dt;
    rep.distance_m += 0.5 * (r.v + rows[i + 1].v) * dt;
  }
  rep.delta_soc = rows.front().soc - rows.back().soc;
  rep.soc_correction_j = cfg.e_batt_j * rep.delta_soc / cfg.eta_sys;
  rep.e_eq_j = rep.fuel_energy_j + rep.soc_correction_j;
  return rep;
}

} // namespace hevsim::energy
