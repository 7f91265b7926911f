#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmd/dynamics.hpp"
#include "tmd/ensemble.hpp"
#include "tmd/geometry.hpp"
#include "tmd/harness/config.hpp"
#include "tmd/problems.hpp"
#include "tmd/targets.hpp"

namespace tmd::harness {

/// Everything a subcommand needs, resolved from a config.
///
/// For the splitting presets (dr, fb) the problem is the VI solved by the
/// split pair, the state lives in the governing space and `readout` maps it to
/// the shadow point where natural residuals are measured.
struct Experiment {
  VIProblem problem;
  MirrorGeometry geometry;
  TargetSpec spec;
  FlowModel model;
  std::optional<SplitPair> split;
  double eta = 0.1;
  Vector x0;
  std::optional<Vector> reference;
  VectorMap readout;

  bool flow_mode = false;
  Integrator integrator = Integrator::kRk4;
  double dt = 1e-2;
  double t_end = 10.0;
  long steps = 1000;
  int stride = 1;
  double stop_residual = 1e-8;
};

Experiment build_experiment(const ExperimentConfig& config);

/// Geometry by config name; `set` is the feasible set of the problem.
MirrorGeometry geometry_by_name(const std::string& name, const FeasibleSet& set,
                                const std::optional<Vector>& weights);

const std::vector<std::string>& preset_names();
const std::vector<std::string>& geometry_names();
/// Library problems plus the configurable box/affine split problem.
const std::vector<std::string>& problem_names();

RunRecord run_experiment(const Experiment& experiment);

/// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitBudget = 2;

/// Result of a subcommand: exit code plus the JSON document it wrote.
struct CommandResult {
  int exit_code = kExitError;
  nlohmann::json report;
  std::vector<std::string> files;
};

/// Output directory: TMD_OUTPUT_DIR when set, else output.dir.
std::string output_directory(const ExperimentConfig& config);

CommandResult command_solve(const ExperimentConfig& config);
CommandResult command_compare(const ExperimentConfig& config);
CommandResult command_check(const ExperimentConfig& config);
CommandResult command_ensemble(const ExperimentConfig& config);

}  // namespace tmd::harness
