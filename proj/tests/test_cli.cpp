#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_support.hpp"

// Exit-code contract and output artifacts of the command-line tool:
// 0 success, 1 config/IO error, 2 domain infeasibility.

namespace {

const std::string kCli = HEVSIM_CLI_PATH;
const std::string kCfg = test_support::config_dir() + "/default.cfg";

int run_cli(const std::string& args) {
  std::string cmd = kCli + " " + args + " > /dev/null 2> /dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string temp_file(const std::string& name, const std::string& content) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream f(p);
  f << content;
  return p.string();
}

} // namespace

TEST_CASE("plan succeeds on the shipped config and writes the profile CSV") {
  auto out = std::filesystem::temp_directory_path() / "hevsim_cli_plan.csv";
  CHECK(run_cli("plan --driving eco --config " + kCfg + " --out " + out.string()) == 0);
  std::ifstream f(out);
  std::string header;
  std::getline(f, header);
  CHECK(header == "t_s,v_mps");
}

TEST_CASE("config errors exit with code 1") {
  CHECK(run_cli("simulate --scenario not_a_scenario --config " + kCfg) == 1);
  CHECK(run_cli("simulate --scenario eco_eco --config /nonexistent.cfg") == 1);

  std::string bad = temp_file("hevsim_cli_bad.cfg", "[alpha\n");
  CHECK(run_cli("plan --config " + bad) == 1);
}

TEST_CASE("an unplannable corridor exits with code 2") {
  // queue discharge exceeds the green in every cycle: no usable window
  std::string corridor = temp_file("hevsim_cli_jam_corr.cfg",
                                   "[corridor]\n"
                                   "length_m = 1000\n"
                                   "speed_limit_mps = 17.9\n"
                                   "[intersection]\n"
                                   "position_m = 500\n"
                                   "cycle_s = 60\n"
                                   "green_offset_s = 0\n"
                                   "green_duration_s = 20\n"
                                   "initial_queue = 30\n"
                                   "discharge_rate = 0.5\n");
  std::string cfg = temp_file("hevsim_cli_jam.cfg",
                              "[alpha]\na1 = 1\na2 = 0\na3 = 0\na4 = 0\n"
                              "[beta]\npoints = 0:0.5, 8.94:1.1\nscale = 1.0\n"
                              "[blower]\npoints = 10:0.02, 40:0.08, 70:0.15\n"
                              "[scenario jam]\nt_amb_c = -5\ncorridor = " +
                                  corridor + "\n");
  CHECK(run_cli("plan --driving eco --config " + cfg + " --out -") == 2);
  CHECK(run_cli("simulate --scenario jam --config " + cfg) == 2);
}

TEST_CASE("fit-alpha on the shipped samples reports a sub-degree residual") {
  auto out = std::filesystem::temp_directory_path() / "hevsim_cli_fit.json";
  int rc = run_cli("fit-alpha --samples " + test_support::config_dir() +
                   "/alpha_samples.csv --config " + kCfg + " --out " + out.string());
  CHECK(rc == 0);
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string json = ss.str();
  CHECK(json.find("\"rms_C\"") != std::string::npos);
  auto at = json.find("\"rms_C\": ");
  double rms = std::stod(json.substr(at + 9));
  CHECK(rms <= 1.0);
}

TEST_CASE("calibrate-beta prints the scale and exits cleanly") {
  std::string cmd = kCli + " calibrate-beta --config " + kCfg + " --out " +
                    (std::filesystem::temp_directory_path() / "hevsim_cli_cal.json").string() +
                    " > " + (std::filesystem::temp_directory_path() / "hevsim_cli_cal.txt").string() +
                    " 2> /dev/null";
  REQUIRE(std::system(cmd.c_str()) == 0);
  std::ifstream f(std::filesystem::temp_directory_path() / "hevsim_cli_cal.txt");
  std::string line;
  std::getline(f, line);
  CHECK(line.find("calibrated beta scale") != std::string::npos);
}

TEST_CASE("replay of a simulator log via the CLI matches the in-run report") {
  auto dir = std::filesystem::temp_directory_path() / "hevsim_cli_replay";
  std::filesystem::remove_all(dir);
  REQUIRE(run_cli("simulate --scenario mild_eco --config " + kCfg + " --out " + dir.string()) ==
          0);
  auto out = dir / "replayed.json";
  REQUIRE(run_cli("replay --log " + (dir / "mild_eco_replay.csv").string() + " --config " + kCfg +
                  " --out " + out.string()) == 0);

  auto grab = [](const std::filesystem::path& p, const std::string& key) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string s = ss.str();
    auto at = s.find("\"" + key + "\": ");
    REQUIRE(at != std::string::npos);
    return std::stod(s.substr(at + key.size() + 4));
  };
  double replayed = grab(out, "E_eq_J");
  double in_run = grab(dir / "mild_eco_report.json", "E_eq_J");
  CHECK(std::abs(replayed - in_run) <= 1e-9 * std::max(1.0, std::abs(in_run)));
}
