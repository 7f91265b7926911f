#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tmd/harness/config.hpp"
#include "tmd/harness/experiment.hpp"
#include "tmd/harness/output.hpp"

using namespace tmd;
using namespace tmd::harness;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tmd_harness_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig load_config(const std::string& name, const std::string& out) {
  ::unsetenv("TMD_OUTPUT_DIR");
  auto config = ExperimentConfig::load(std::string(TMD_CONFIG_DIR) + "/" + name);
  config.set("output.dir", out);
  return config;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream cols(line);
    while (std::getline(cols, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("config grammar") {
  const auto config = ExperimentConfig::parse(
      "# comment\n"
      "[problem]\n"
      "name = rps_game   ; trailing comment\n"
      "\n"
      "[preset]\n"
      "name = bnn\n"
      "eta = 0.5\n",
      "inline");
  CHECK(config.get_string("problem.name") == "rps_game");
  CHECK(config.get_double("preset.eta") == 0.5);
  CHECK(config.get_string("run.mode") == "discrete");
}

TEST_CASE("config errors carry line and key context") {
  const auto message_of = [](const std::string& text) {
    try {
      ExperimentConfig::parse(text, "cfg");
    } catch (const ConfigParseError& err) {
      return std::string(err.what());
    }
    return std::string();
  };
  CHECK(message_of("[run]\nsteps = 3\nbogus = 1\n").find("cfg:3") != std::string::npos);
  CHECK(message_of("[run]\nsteps = 3\nbogus = 1\n").find("run.bogus") != std::string::npos);
  CHECK(message_of("run.steps = 1\nrun.steps = 2\n").find("duplicate") != std::string::npos);
  CHECK(message_of("[run\n").find("cfg:1") != std::string::npos);
  CHECK(message_of("just words\n").find("cfg:1") != std::string::npos);
  CHECK(message_of("[]\n").find("cfg:1") != std::string::npos);

  const auto config = ExperimentConfig::parse("\n[preset]\neta = fast\n", "cfg");
  try {
    config.get_double("preset.eta");
    FAIL("expected an error");
  } catch (const ConfigParseError& err) {
    const std::string what = err.what();
    CHECK(what.find("cfg:3") != std::string::npos);
    CHECK(what.find("preset.eta") != std::string::npos);
  }
  CHECK_THROWS_AS(ExperimentConfig::parse("run.x0 = 1, two\n").get_vector("run.x0"),
                  ConfigParseError);
  CHECK_THROWS_AS(ExperimentConfig::parse("run.steps = 1.5\n").get_long("run.steps"),
                  ConfigParseError);
  CHECK_THROWS_AS(ExperimentConfig::parse("ensemble.verify = maybe\n").get_bool("ensemble.verify"),
                  ConfigParseError);
  CHECK_THROWS_AS(ExperimentConfig::load("/nonexistent/tmd.ini"), ConfigParseError);
}

TEST_CASE("ensemble member keys") {
  const auto config = ExperimentConfig::parse(
      "[ensemble]\nmember.3.z0 = 1, 2\nmember.0.geometry = entropy\n");
  CHECK(config.ensemble_members() == std::vector<int>{0, 3});
  CHECK_THROWS_AS(ExperimentConfig::parse("ensemble.member.x.z0 = 1\n"), ConfigParseError);
  CHECK_THROWS_AS(ExperimentConfig::parse("ensemble.member.1.color = red\n"), ConfigParseError);
}

TEST_CASE("doubles survive formatting") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("trajectory csv schema") {
  RunRecord record;
  Sample a;
  a.x = Vector::Constant(3, 0.25);
  a.target_residual = 0.5;
  a.natural_residual = 0.125;
  Sample b = a;
  b.step = 1;
  b.time = 1.0;
  b.lyapunov = 2.0;
  record.samples = {a, b};
  std::stringstream in(trajectory_csv(record));
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,time,x_0,x_1,x_2,residual_target,residual_natural,lyapunov");
  std::string row;
  std::getline(in, row);
  CHECK(row == "0,0,0.25,0.25,0.25,0.5,0.125,");
  std::getline(in, row);
  CHECK(row == "1,1,0.25,0.25,0.25,0.5,0.125,2");
}

TEST_CASE("solve") {
  const auto dir = scratch_dir("solve");

  SUBCASE("eg converges and the summary matches the csv") {
    const auto config = load_config("eg_skew.ini", dir.string());
    const auto result = command_solve(config);
    CHECK(result.exit_code == kExitOk);
    const auto& summary = result.report;
    CHECK(summary["final_residual_target"].get<double>() <= 1e-8);

    const auto rows = read_csv(dir / "eg_skew_trajectory.csv");
    REQUIRE(rows.size() >= 2);
    const std::size_t width = 2 + 2 + 3;
    for (const auto& r : rows) CHECK(r.size() == width);
    const auto& last = rows.back();
    CHECK(std::stol(last[0]) == summary["final_step"].get<long>());
    CHECK(std::stod(last[4]) == summary["final_residual_target"].get<double>());
    CHECK(std::stod(last[5]) == summary["final_residual_natural"].get<double>());

    // Lyapunov violations recomputed from the csv column.
    const double band = summary["lyapunov"]["band"].get<double>();
    long violations = 0;
    for (std::size_t k = 2; k < rows.size(); ++k)
      if (std::stod(rows[k][6]) - std::stod(rows[k - 1][6]) > band) ++violations;
    CHECK(violations == summary["lyapunov"]["violations"].get<long>());

    // The echoed config rebuilds an equivalent configuration.
    const auto echoed =
        summary["config"].get<std::map<std::string, std::string>>();
    const auto rebuilt = ExperimentConfig::from_flat(echoed);
    CHECK(rebuilt.flat() == config.flat());
    CHECK(ExperimentConfig::parse(rebuilt.to_text()).flat() == config.flat());
    const auto saved = nlohmann::json::parse(read_file(dir / "eg_skew_summary.json"));
    CHECK(saved["config"] == summary["config"]);
  }

  SUBCASE("vanilla mirror descent exhausts the budget") {
    const auto result = command_solve(load_config("md_skew.ini", dir.string()));
    CHECK(result.exit_code == kExitBudget);
    CHECK(result.report["final_residual_natural"].get<double>() >=
          result.report["initial_residual_natural"].get<double>());
  }

  SUBCASE("zero budget writes only the initial sample") {
    const auto result = command_solve(load_config("budget_zero.ini", dir.string()));
    CHECK(result.exit_code == kExitBudget);
    CHECK(read_csv(dir / "budget_zero_trajectory.csv").size() == 2);
  }

  SUBCASE("no reference leaves the lyapunov column empty") {
    auto config = load_config("eg_skew.ini", dir.string());
    config.set("run.reference", "none");
    config.set("run.steps", "3");
    command_solve(config);
    for (const auto& r : read_csv(dir / "eg_skew_trajectory.csv")) CHECK(r.size() == 7);
    const auto rows = read_csv(dir / "eg_skew_trajectory.csv");
    CHECK(rows[1][6].empty());
  }

  SUBCASE("environment overrides the output directory") {
    const auto other = scratch_dir("solve_env");
    auto config = load_config("budget_zero.ini", dir.string());
    ::setenv("TMD_OUTPUT_DIR", other.c_str(), 1);
    command_solve(config);
    ::unsetenv("TMD_OUTPUT_DIR");
    CHECK(std::filesystem::exists(other / "budget_zero_trajectory.csv"));
  }
}

TEST_CASE("compare") {
  const auto dir = scratch_dir("compare");
  const auto eg = command_compare(load_config("compare_eg.ini", dir.string()));
  CHECK(eg.exit_code == kExitOk);
  CHECK(eg.report["max_deviation"].get<double>() <= 1e-12);

  const auto dr = command_compare(load_config("compare_dr.ini", dir.string()));
  CHECK(dr.exit_code == kExitOk);
  CHECK(dr.report["count"].get<long>() == 200);
  CHECK(dr.report["max_deviation"].get<double>() <= 1e-12);

  const auto bnn = command_compare(load_config("compare_bnn.ini", dir.string()));
  CHECK(bnn.exit_code == kExitOk);
  CHECK(bnn.report["max_deviation"].get<double>() <= 1e-10);
  CHECK(read_csv(dir / "compare_bnn_compare.csv").size() == 1001);

  CHECK_THROWS_AS(command_compare(load_config("md_skew.ini", dir.string())), ConfigError);
}

TEST_CASE("check") {
  const auto dir = scratch_dir("check");
  const auto eg = command_check(load_config("check_eg_skew.ini", dir.string()));
  CHECK(eg.exit_code == kExitOk);
  CHECK_FALSE(eg.report["refuted"].get<bool>());
  CHECK(eg.report["checks"]["relaxed_condition"]["nonpositive"].get<int>() == 0);

  const auto negated = command_check(load_config("check_negated_skew.ini", dir.string()));
  CHECK_FALSE(negated.report["checks"]["C2"]["refuted"].get<bool>());
  CHECK(std::abs(negated.report["checks"]["C2"]["min_inner"].get<double>()) <= 1e-12);

  const auto anti = command_check(load_config("check_antimonotone.ini", dir.string()));
  CHECK(anti.exit_code == kExitError);
  CHECK(anti.report["checks"]["C2"]["refuted"].get<bool>());
  CHECK(anti.report["checks"]["C2"].contains("witness"));
  CHECK(std::filesystem::exists(dir / "check_antimonotone_check.json"));
}

TEST_CASE("ensemble") {
  const auto dir = scratch_dir("ensemble");
  const auto quad = command_ensemble(load_config("ensemble_quadratic.ini", dir.string()));
  CHECK(quad.exit_code == kExitOk);
  CHECK(quad.report["max_deviation"].get<double>() <= 1e-9);
  CHECK(quad.report["rigidity_exact"].get<bool>());

  const auto entropy = command_ensemble(load_config("ensemble_entropy.ini", dir.string()));
  CHECK(entropy.exit_code == kExitOk);
  CHECK(entropy.report["max_deviation"].get<double>() <= 1e-8);

  auto unverified = load_config("ensemble_entropy.ini", dir.string());
  unverified.set("ensemble.verify", "false");
  const auto plain = command_ensemble(unverified);
  CHECK(plain.exit_code == kExitOk);
  CHECK_FALSE(plain.report.contains("max_deviation"));

  auto none = load_config("eg_skew.ini", dir.string());
  CHECK_THROWS_AS(command_ensemble(none), ConfigError);
}

TEST_CASE("experiment validation") {
  auto config = ExperimentConfig();
  config.set("preset.name", "dmd");
  CHECK_THROWS_AS(build_experiment(config), ConfigError);
  config.set("run.mode", "flow");
  CHECK_NOTHROW(build_experiment(config));

  auto entropy_on_plane = ExperimentConfig();
  entropy_on_plane.set("geometry.name", "entropy");
  CHECK_THROWS_AS(build_experiment(entropy_on_plane), ConfigError);

  auto infeasible = ExperimentConfig();
  infeasible.set("problem.name", "rps_game");
  infeasible.set("run.x0", "1, 1, 1");
  CHECK_THROWS_AS(build_experiment(infeasible), ConfigError);

  auto unknown = ExperimentConfig();
  unknown.set("preset.name", "nesterov");
  CHECK_THROWS_AS(build_experiment(unknown), ConfigError);

  auto plus = ExperimentConfig();
  plus.set("preset.name", "eg_plus");
  CHECK(build_experiment(plus).spec.alpha == doctest::Approx(0.5));

  auto dr = ExperimentConfig();
  dr.set("preset.name", "dr");
  CHECK_THROWS_AS(build_experiment(dr), ConfigError);
  dr.set("problem.name", "box_affine_split");
  const auto e = build_experiment(dr);
  CHECK(e.readout);
  CHECK((*e.reference)[0] == doctest::Approx(0.9));  // z* = x* + eta (x* - shift) with eta 0.1
}
