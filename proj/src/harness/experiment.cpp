#include "tmd/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>

#include "tmd/harness/output.hpp"
#include "tmd/reference.hpp"

namespace tmd::harness {

using nlohmann::json;

namespace {

constexpr double kFixedPointTolerance = 1e-8;
constexpr double kSolutionResidualTolerance = 1e-6;
constexpr long kCheckRunCap = 5000;

Vector broadcast(const Vector& v, int dim, const std::string& key) {
  if (v.size() == dim) return v;
  if (v.size() == 1) return Vector::Constant(dim, v[0]);
  throw ConfigError("key '" + key + "': expected 1 or " + std::to_string(dim) + " entries, got " +
                    std::to_string(v.size()));
}

struct ProblemBundle {
  VIProblem problem;
  std::optional<SplitPair> split;
};

ProblemBundle build_problem(const ExperimentConfig& config) {
  const std::string name = config.get_string("problem.name");
  std::optional<int> dim;
  if (!config.is_auto("problem.dim")) dim = static_cast<int>(config.get_long("problem.dim"));

  if (name == "box_affine_split") {
    const Vector lower = config.get_vector("split.lower");
    const Vector upper = config.get_vector("split.upper");
    const Vector shift = config.get_vector("split.shift");
    const int n = dim.value_or(static_cast<int>(
        std::max({lower.size(), upper.size(), shift.size()})));
    const FeasibleSet box = FeasibleSet::box(broadcast(lower, n, "split.lower"),
                                             broadcast(upper, n, "split.upper"));
    SplitPair split = box_affine_split(box, broadcast(shift, n, "split.shift"));
    VIProblem problem = *split.problem;
    return {std::move(problem), std::move(split)};
  }

  const auto& names = library_problem_names();
  if (std::find(names.begin(), names.end(), name) == names.end())
    throw ConfigError("key 'problem.name': unknown problem '" + name + "'");
  ProblemParams params;
  params.dim = dim;
  params.shift = config.get_double("problem.shift");
  params.costs = config.get_vector("problem.costs");
  params.box_lower = config.get_double("problem.box_lower");
  params.box_upper = config.get_double("problem.box_upper");
  const long seed = config.get_long("problem.seed");
  if (seed < 0) throw ConfigError("key 'problem.seed': must be nonnegative");
  params.seed = static_cast<std::uint64_t>(seed);
  return {library_problem(name, params), std::nullopt};
}

TargetSpec build_tmd_spec(const std::string& preset, const ExperimentConfig& config,
                          const MirrorGeometry& geometry, const ProblemBundle& bundle,
                          double eta) {
  const VIProblem& problem = bundle.problem;
  const auto require_split = [&]() -> const SplitPair& {
    if (!bundle.split)
      throw ConfigError("preset '" + preset + "' needs problem.name = box_affine_split");
    return *bundle.split;
  };
  if (preset == "ppa") {
    TargetSpec spec = preset_ppa(geometry, problem, eta);
    auto& solve = std::get<ResolventSolveTarget>(spec.target);
    solve.tol = config.get_double("preset.inner_tol");
    solve.max_iterations = static_cast<int>(config.get_long("preset.inner_max_iterations"));
    return spec;
  }
  if (preset == "eg" || preset == "eg_plus") {
    const double eta1 = config.is_auto("preset.eta1") ? eta : config.get_double("preset.eta1");
    double eta2 = eta1;
    if (!config.is_auto("preset.eta2")) {
      eta2 = config.get_double("preset.eta2");
    } else if (preset == "eg_plus") {
      eta2 = 0.5 * eta1;
    }
    if (preset == "eg" && eta2 != eta1)
      throw ConfigError("preset 'eg' uses eta1 = eta2; use 'eg_plus' for distinct steps");
    return preset_eg(geometry, problem, eta1, eta2);
  }
  if (preset == "dr") return preset_dr(require_split(), FeasibleSet::whole_space(problem.dim()), eta);
  if (preset == "fb") return preset_fb(require_split(), FeasibleSet::whole_space(problem.dim()), eta);
  if (preset == "bnn") return preset_bnn(problem, eta);
  if (preset == "fbf") return preset_fbf(problem, eta);
  if (preset == "md") return preset_vanilla_md(geometry, problem, eta);
  throw ConfigError("key 'preset.name': unknown preset '" + preset + "'");
}

std::uint64_t seed_of(const ExperimentConfig& config) {
  const long seed = config.get_long("run.seed");
  if (seed < 0) throw ConfigError("key 'run.seed': must be nonnegative");
  return static_cast<std::uint64_t>(seed);
}

std::string output_path(const ExperimentConfig& config, const std::string& suffix) {
  return (std::filesystem::path(output_directory(config)) /
          (config.get_string("output.prefix") + "_" + suffix))
      .string();
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<Vector> sample_points(const FeasibleSet& set, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vector> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) points.push_back(set.sample(rng));
  return points;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"ppa", "eg",  "eg_plus", "dr",
                                                 "fb",  "bnn", "fbf",     "md",
                                                 "dmd", "dmd_vanilla", "higher_order"};
  return names;
}

const std::vector<std::string>& geometry_names() {
  static const std::vector<std::string> names = {"euclidean", "entropy", "weighted_quadratic"};
  return names;
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out = library_problem_names();
    out.push_back("box_affine_split");
    return out;
  }();
  return names;
}

MirrorGeometry geometry_by_name(const std::string& name, const FeasibleSet& set,
                                const std::optional<Vector>& weights) {
  if (name == "euclidean") return euclidean_geometry(set);
  if (name == "entropy") {
    if (set.kind() != SetKind::kSimplex)
      throw ConfigError("entropy geometry needs a simplex problem");
    return entropy_geometry(set.dim());
  }
  if (name == "weighted_quadratic") {
    if (set.kind() != SetKind::kWholeSpace)
      throw ConfigError("weighted_quadratic geometry needs an unconstrained problem");
    return weighted_quadratic_geometry(weights.value_or(Vector::Ones(set.dim())));
  }
  throw ConfigError("unknown geometry '" + name + "'");
}

std::string output_directory(const ExperimentConfig& config) {
  if (const char* env = std::getenv("TMD_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return config.get_string("output.dir");
}

Experiment build_experiment(const ExperimentConfig& config) {
  ProblemBundle bundle = build_problem(config);
  const std::string preset = config.get_string("preset.name");
  const bool splitting = preset == "dr" || preset == "fb";
  // Splitting presets run in the governing space, which is unconstrained.
  const FeasibleSet state_set =
      splitting ? FeasibleSet::whole_space(bundle.problem.dim()) : bundle.problem.set;

  std::optional<Vector> weights;
  if (!config.is_auto("geometry.weights")) weights = config.get_vector("geometry.weights");
  MirrorGeometry geometry =
      geometry_by_name(config.get_string("geometry.name"), state_set, weights);
  if (geometry.dim() != bundle.problem.dim())
    throw ConfigError("geometry dimension does not match the problem");

  const double eta = config.get_double("preset.eta");
  FlowModel model = FlowModel::tmd();
  TargetSpec spec;
  if (preset == "dmd") {
    const long which = config.get_long("preset.case");
    if (which != 1 && which != 2) throw ConfigError("key 'preset.case': expected 1 or 2");
    const double gamma = config.get_double("preset.gamma");
    spec = preset_calibrated_dmd(geometry, bundle.problem, eta, gamma,
                                 which == 1 ? DmdCase::kDualGradient : DmdCase::kExtragradient);
    model = FlowModel::calibrated_dmd(gamma);
  } else if (preset == "dmd_vanilla") {
    spec = preset_vanilla_md(geometry, bundle.problem, eta);
    model = FlowModel::vanilla_dmd(config.get_double("preset.gamma"), bundle.problem.F);
  } else if (preset == "higher_order") {
    const std::string base = config.get_string("preset.base");
    if (base == "higher_order" || base == "dmd" || base == "dmd_vanilla")
      throw ConfigError("key 'preset.base': must name a plain TMD preset");
    spec = build_tmd_spec(base, config, geometry, bundle, eta);
    model = FlowModel::higher_order(config.get_double("preset.gamma1"),
                                    config.get_double("preset.gamma2"));
  } else {
    spec = build_tmd_spec(preset, config, geometry, bundle, eta);
  }
  if (!config.is_auto("preset.alpha")) spec.alpha = config.get_double("preset.alpha");
  if (!config.is_auto("preset.beta")) spec.beta = config.get_double("preset.beta");

  const std::string mode = config.get_string("run.mode");
  if (mode != "discrete" && mode != "flow")
    throw ConfigError("key 'run.mode': expected discrete or flow, got '" + mode + "'");
  const bool flow_mode = mode == "flow";
  if (!flow_mode && model.kind != FlowModel::Kind::kTmd)
    throw ConfigError("preset '" + preset + "' is a flow; set run.mode = flow");

  VectorMap readout;
  std::optional<Vector> reference;
  const std::string ref_key = config.get_string("run.reference");
  if (ref_key == "known") {
    reference = bundle.problem.known_solution;
  } else if (ref_key != "none") {
    reference = config.get_vector("run.reference");
  }
  if (preset == "dr") {
    const SplitPair split = *bundle.split;
    readout = [split, eta](const Vector& z) { return dr_shadow(split, eta, z); };
    // Fixed point of the governing map: z* = x* + eta B(x*).
    if (ref_key == "known" && reference)
      reference = Vector(*reference + eta * split.B_forward(*reference));
  }
  if (reference && reference->size() != bundle.problem.dim())
    throw ConfigError("key 'run.reference': dimension mismatch");

  Vector x0;
  if (config.get_string("run.x0") == "center") {
    x0 = state_set.analytic_center();
  } else {
    x0 = config.get_vector("run.x0");
    if (x0.size() != bundle.problem.dim()) throw ConfigError("key 'run.x0': dimension mismatch");
    if (!state_set.contains(x0)) throw ConfigError("key 'run.x0': point is not feasible");
  }

  const long steps = config.get_long("run.steps");
  if (steps < 0) throw ConfigError("key 'run.steps': must be nonnegative");
  int stride = flow_mode ? 10 : 1;
  if (!config.is_auto("output.stride")) {
    const long s = config.get_long("output.stride");
    if (s < 1) throw ConfigError("key 'output.stride': must be at least 1");
    stride = static_cast<int>(s);
  }

  std::optional<SplitPair> split = bundle.split;
  return Experiment{
      .problem = std::move(bundle.problem),
      .geometry = std::move(geometry),
      .spec = std::move(spec),
      .model = std::move(model),
      .split = std::move(split),
      .eta = eta,
      .x0 = std::move(x0),
      .reference = std::move(reference),
      .readout = std::move(readout),
      .flow_mode = flow_mode,
      .integrator = integrator_from_string(config.get_string("run.integrator")),
      .dt = config.get_double("run.dt"),
      .t_end = config.get_double("run.t_end"),
      .steps = steps,
      .stride = stride,
      .stop_residual = config.get_double("run.stop_residual"),
  };
}

RunRecord run_experiment(const Experiment& e) {
  SolverState state = initial_state(e.geometry, e.x0);
  if (e.flow_mode) {
    FlowOptions options;
    options.integrator = e.integrator;
    options.dt = e.dt;
    options.t_end = e.t_end;
    options.stride = e.stride;
    options.stop_residual = e.stop_residual;
    options.reference = e.reference;
    options.readout = e.readout;
    options.model = e.model;
    return flow(e.geometry, e.spec, e.problem, std::move(state), options);
  }
  RunOptions options;
  options.max_steps = e.steps;
  options.stride = e.stride;
  options.stop_residual = e.stop_residual;
  options.reference = e.reference;
  options.readout = e.readout;
  return run_discrete(e.geometry, e.spec, e.problem, std::move(state), options);
}

CommandResult command_solve(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Experiment e = build_experiment(config);
  const RunRecord record = run_experiment(e);

  CommandResult result;
  const std::string csv_path = output_path(config, "trajectory.csv");
  write_text_file(csv_path, trajectory_csv(record));

  const Sample& first = record.samples.front();
  const Sample& last = record.samples.back();
  json lyapunov = {{"enabled", false}};
  if (e.reference && last.lyapunov) {
    const LyapunovReport report = lyapunov_series(record, e.geometry, *e.reference);
    lyapunov = {{"enabled", true},
                {"band", report.band},
                {"violations", report.violations.size()},
                {"initial", report.values.front()},
                {"final", report.values.back()},
                {"total_decrease", report.total_decrease}};
  }
  json& summary = result.report;
  summary["command"] = "solve";
  summary["config"] = config.flat();
  summary["termination"] = to_string(record.termination);
  summary["message"] = record.message;
  summary["samples"] = record.samples.size();
  summary["final_step"] = last.step;
  summary["final_time"] = last.time;
  summary["final_x"] = to_json(last.x);
  summary["initial_residual_target"] = first.target_residual;
  summary["initial_residual_natural"] = first.natural_residual;
  summary["final_residual_target"] = last.target_residual;
  summary["final_residual_natural"] = last.natural_residual;
  summary["lyapunov"] = lyapunov;
  summary["trajectory_csv"] = csv_path;
  summary["wall_clock_seconds"] = elapsed_seconds(start);

  const std::string summary_path = output_path(config, "summary.json");
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.files = {csv_path, summary_path};
  switch (record.termination) {
    case Termination::kConverged: result.exit_code = kExitOk; break;
    case Termination::kBudget: result.exit_code = kExitBudget; break;
    case Termination::kNonFinite: result.exit_code = kExitError; break;
  }
  return result;
}

CommandResult command_compare(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const std::string preset = config.get_string("preset.name");
  static const std::vector<std::string> discrete = {"ppa", "eg", "eg_plus", "dr", "fb"};
  static const std::vector<std::string> fields = {"bnn", "fbf"};
  const bool is_discrete = std::find(discrete.begin(), discrete.end(), preset) != discrete.end();
  const bool is_field = std::find(fields.begin(), fields.end(), preset) != fields.end();
  if (!is_discrete && !is_field)
    throw ConfigError("compare: preset '" + preset + "' has no reference iteration");

  const Experiment e = build_experiment(config);
  const double tolerance = config.is_auto("compare.tolerance")
                               ? (is_discrete ? 1e-9 : 1e-8)
                               : config.get_double("compare.tolerance");
  std::vector<std::vector<double>> rows;
  double max_deviation = 0.0;
  const auto record = [&](double index, double deviation) {
    rows.push_back({index, deviation});
    // NaN is sticky so that a non-finite leg fails the comparison.
    if (std::isnan(deviation) || deviation > max_deviation) max_deviation = deviation;
  };

  if (is_discrete) {
    const bool entropy = e.geometry.family() == GeometryFamily::kEntropy;
    const bool euclid = e.geometry.family() == GeometryFamily::kEuclidean;
    std::function<Vector(const Vector&)> ref_step;
    if (preset == "ppa") {
      if (entropy) {
        ref_step = [&](const Vector& x) {
          return reference::ppa_entropic_constant_step(e.problem, e.eta, x);
        };
      } else if (euclid) {
        ref_step = [&](const Vector& x) { return reference::ppa_affine_step(e.problem, e.eta, x); };
      }
    } else if (preset == "eg" || preset == "eg_plus") {
      const double eta1 =
          config.is_auto("preset.eta1") ? e.eta : config.get_double("preset.eta1");
      const double eta2 = e.spec.alpha * eta1;
      if (entropy) {
        ref_step = [&, eta1, eta2](const Vector& x) {
          return reference::eg_entropic_step(e.problem, eta1, eta2, x);
        };
      } else if (euclid) {
        ref_step = [&, eta1, eta2](const Vector& x) {
          return reference::eg_projected_step(e.problem, eta1, eta2, x);
        };
      }
    } else if (preset == "dr") {
      ref_step = [&](const Vector& x) { return reference::dr_step(*e.split, e.eta, x); };
    } else {
      ref_step = [&](const Vector& x) { return reference::fb_step(*e.split, e.eta, x); };
    }
    if (!ref_step)
      throw UnsupportedError("compare: no reference iteration for preset '" + preset +
                             "' with geometry '" + e.geometry.name() + "'");
    SolverState state = initial_state(e.geometry, e.x0);
    Vector x_ref = e.x0;
    record(0, (state.x - x_ref).norm());
    for (long k = 1; k <= e.steps; ++k) {
      state = step_discrete(e.geometry, e.spec, state);
      x_ref = ref_step(x_ref);
      record(static_cast<double>(k), (state.x - x_ref).norm());
    }
  } else {
    const long count = config.get_long("compare.samples");
    if (count < 1) throw ConfigError("key 'compare.samples': must be positive");
    const auto points = sample_points(e.problem.set, static_cast<int>(count), seed_of(config));
    for (std::size_t k = 0; k < points.size(); ++k) {
      const Vector& x = points[k];
      // FBF compares the dual drift, which is the primal velocity whenever the
      // mirror map is the identity.
      const Vector tmd = preset == "bnn" ? primal_velocity(e.geometry, e.spec, x)
                                         : dual_drift(e.spec, x).increment;
      const Vector ref = preset == "bnn" ? reference::bnn_field(e.problem, x)
                                         : reference::fbf_field(e.problem, e.eta, x);
      record(static_cast<double>(k), (tmd - ref).norm());
    }
  }

  CommandResult result;
  const std::string csv_path = output_path(config, "compare.csv");
  write_text_file(csv_path, table_csv({is_discrete ? "step" : "sample", "deviation"}, rows));
  const bool passed = max_deviation <= tolerance;
  json& summary = result.report;
  summary["command"] = "compare";
  summary["config"] = config.flat();
  summary["preset"] = preset;
  summary["kind"] = is_discrete ? "discrete" : "vector_field";
  summary["count"] = is_discrete ? e.steps : static_cast<long>(rows.size());
  summary["max_deviation"] = max_deviation;
  summary["tolerance"] = tolerance;
  summary["passed"] = passed;
  summary["deviation_csv"] = csv_path;
  summary["wall_clock_seconds"] = elapsed_seconds(start);
  const std::string summary_path = output_path(config, "compare.json");
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.files = {csv_path, summary_path};
  result.exit_code = passed ? kExitOk : kExitError;
  return result;
}

CommandResult command_check(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Experiment e = build_experiment(config);
  const long count = config.get_long("check.samples");
  if (count < 2) throw ConfigError("key 'check.samples': must be at least 2");
  const std::uint64_t seed = seed_of(config);

  std::optional<Vector> x_bar;
  const std::string bar_key = config.get_string("check.x_bar");
  if (bar_key == "known") {
    x_bar = e.reference;
  } else if (bar_key != "none") {
    x_bar = config.get_vector("check.x_bar");
    if (x_bar->size() != e.problem.dim()) throw ConfigError("key 'check.x_bar': dimension mismatch");
  }

  const FeasibleSet& set = e.spec.set;
  const auto points = sample_points(set, static_cast<int>(count), seed);
  const bool uses_target = e.spec.alpha != 0.0;

  // Targets at every sample; failures feed [C4].
  std::vector<std::optional<Vector>> targets(points.size());
  json c4 = {{"applicable", uses_target}};
  int c4_failures = 0;
  double c4_worst = 0.0;
  if (uses_target) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      try {
        Vector t = resolve_target(e.spec, points[k]);
        if (t.allFinite() && set.contains(t)) {
          targets[k] = std::move(t);
        } else {
          ++c4_failures;
        }
      } catch (const NonconvergenceError& err) {
        ++c4_failures;
        c4_worst = std::max(c4_worst, err.last_residual());
      } catch (const Error&) {
        ++c4_failures;
      }
    }
    c4["samples"] = points.size();
    c4["failures"] = c4_failures;
    c4["worst_inner_residual"] = c4_worst;
    c4["refuted"] = c4_failures > 0;
  }

  // [C1]
  const MonotonicityReport s_report =
      sample_monotonicity(e.spec.S, set, static_cast<int>(count), seed);
  json c1 = {{"pairs", s_report.pairs},
             {"min_inner", s_report.min_inner},
             {"min_ratio", s_report.min_ratio},
             {"verdict", to_string(s_report.verdict)},
             {"refuted", s_report.verdict == MonotonicityVerdict::kRefuted}};
  if (s_report.witness) c1["witness"] = {to_json(s_report.witness->first), to_json(s_report.witness->second)};

  // [C2]/[C2+]: <Phi(y), y - x_bar> >= 0, at y = x for an explicit Phi and at
  // y = T(x) through the implicit identity otherwise.
  json c2 = {{"applicable", x_bar.has_value()}};
  if (x_bar) {
    double min_inner = std::numeric_limits<double>::infinity();
    double min_ratio = std::numeric_limits<double>::infinity();
    std::optional<Vector> witness;
    int evaluated = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      Vector y;
      Vector phi;
      if (e.spec.has_explicit_phi()) {
        y = points[k];
        phi = e.spec.Phi(y);
      } else {
        if (!targets[k]) continue;
        y = *targets[k];
        phi = phi_at_target(e.spec, points[k], y);
      }
      ++evaluated;
      const double inner = phi.dot(y - *x_bar);
      if (inner < min_inner) {
        min_inner = inner;
        witness = y;
      }
      const double gap = (y - *x_bar).squaredNorm();
      if (gap > 0.0) min_ratio = std::min(min_ratio, inner / gap);
    }
    const bool refuted = evaluated > 0 && min_inner < kMonotonicityTolerance;
    c2["evaluated"] = evaluated;
    c2["evaluated_at"] = e.spec.has_explicit_phi() ? "x" : "T(x)";
    c2["min_inner"] = evaluated > 0 ? json(min_inner) : json(nullptr);
    c2["min_ratio"] = std::isfinite(min_ratio) ? json(min_ratio) : json(nullptr);
    c2["strict"] = std::isfinite(min_ratio) && min_ratio > 0.0;
    c2["refuted"] = refuted;
    if (refuted) c2["witness"] = to_json(*witness);
  }

  // [C3]: fixed points of T found at x_bar or by iterating must solve the VI.
  json c3 = {{"applicable", uses_target}};
  bool c3_refuted = false;
  if (uses_target) {
    const auto natural_at = [&](const Vector& x) {
      return natural_residual(e.problem, e.readout ? e.readout(x) : x);
    };
    if (x_bar) {
      try {
        const double fixed = (resolve_target(e.spec, *x_bar) - *x_bar).norm();
        c3["x_bar_target_residual"] = fixed;
        if (fixed <= kFixedPointTolerance) {
          const double natural = natural_at(*x_bar);
          c3["x_bar_natural_residual"] = natural;
          c3_refuted = c3_refuted || natural > kSolutionResidualTolerance;
        }
      } catch (const Error& err) {
        c3["x_bar_error"] = err.what();
      }
    }
    try {
      RunOptions options;
      options.max_steps = std::min(e.steps, kCheckRunCap);
      options.stride = static_cast<int>(std::max<long>(1, options.max_steps));
      options.stop_residual = kFixedPointTolerance;
      options.readout = e.readout;
      const RunRecord run =
          run_discrete(e.geometry, e.spec, e.problem, initial_state(e.geometry, e.x0), options);
      const Sample& last = run.samples.back();
      c3["run_termination"] = to_string(run.termination);
      c3["run_target_residual"] = last.target_residual;
      c3["run_natural_residual"] = last.natural_residual;
      if (run.termination == Termination::kConverged)
        c3_refuted = c3_refuted || last.natural_residual > kSolutionResidualTolerance;
    } catch (const Error& err) {
      c3["run_error"] = err.what();
    }
    c3["refuted"] = c3_refuted;
  }

  // Relaxed condition value at sampled states (informational).
  json eq16 = {{"applicable", x_bar.has_value()}};
  if (x_bar) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int nonpositive = 0;
    int evaluated = 0;
    for (std::size_t k = 0; k < points.size(); ++k) {
      if (uses_target && !targets[k]) continue;
      if ((points[k] - *x_bar).norm() == 0.0) continue;
      double value = 0.0;
      try {
        value = relaxed_condition_value(e.spec, points[k], *x_bar);
      } catch (const Error&) {
        continue;
      }
      ++evaluated;
      lo = std::min(lo, value);
      hi = std::max(hi, value);
      if (!(value > 0.0)) ++nonpositive;
    }
    eq16["evaluated"] = evaluated;
    eq16["min"] = evaluated > 0 ? json(lo) : json(nullptr);
    eq16["max"] = evaluated > 0 ? json(hi) : json(nullptr);
    eq16["nonpositive"] = nonpositive;
    try {
      eq16["at_x_bar"] = relaxed_condition_value(e.spec, *x_bar, *x_bar);
    } catch (const Error& err) {
      eq16["at_x_bar_error"] = err.what();
    }
  }

  const bool refuted = c1["refuted"].get<bool>() ||
                       (c2.contains("refuted") && c2["refuted"].get<bool>()) ||
                       (c3.contains("refuted") && c3["refuted"].get<bool>()) ||
                       (c4.contains("refuted") && c4["refuted"].get<bool>());

  CommandResult result;
  json& report = result.report;
  report["command"] = "check";
  report["config"] = config.flat();
  report["x_bar"] = x_bar ? to_json(*x_bar) : json(nullptr);
  report["samples"] = points.size();
  report["checks"] = {{"C1", c1}, {"C2", c2}, {"C3", c3}, {"C4", c4}, {"relaxed_condition", eq16}};
  report["refuted"] = refuted;
  report["wall_clock_seconds"] = elapsed_seconds(start);
  const std::string path = output_path(config, "check.json");
  write_text_file(path, report.dump(2) + "\n");
  result.files = {path};
  result.exit_code = refuted ? kExitError : kExitOk;
  return result;
}

CommandResult command_ensemble(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const Experiment e = build_experiment(config);
  if (e.model.kind != FlowModel::Kind::kTmd)
    throw ConfigError("ensemble: the shared spec must be a plain TMD preset");
  const std::vector<int> indices = config.ensemble_members();
  if (indices.empty()) throw ConfigError("ensemble: no ensemble.member.<i> keys present");

  std::vector<MemberSpec> members;
  for (int i : indices) {
    const std::string prefix = "ensemble.member." + std::to_string(i) + ".";
    const auto flat = config.flat();
    const auto value_of = [&](const std::string& field) -> std::optional<std::string> {
      const auto it = flat.find(prefix + field);
      if (it == flat.end()) return std::nullopt;
      return it->second;
    };
    const std::string name = value_of("geometry").value_or(config.get_string("geometry.name"));
    std::optional<Vector> weights;
    if (value_of("weights")) weights = config.get_vector(prefix + "weights");
    MirrorGeometry geometry = geometry_by_name(name, e.spec.set, weights);
    Vector z0 = Vector::Zero(e.problem.dim());
    if (value_of("z0")) z0 = config.get_vector(prefix + "z0");
    if (z0.size() != e.problem.dim()) throw ConfigError("key '" + prefix + "z0': dimension mismatch");
    members.push_back({std::move(geometry), std::move(z0)});
  }

  std::optional<double> dt;
  long steps = e.steps;
  if (e.flow_mode) {
    dt = e.dt;
    if (!(e.dt > 0.0)) throw ConfigError("key 'run.dt': must be positive");
    steps = static_cast<long>(std::ceil(e.t_end / e.dt - 1e-9));
  }
  const bool verify = config.get_bool("ensemble.verify");
  const double tolerance = config.get_double("ensemble.tolerance");
  const EnsembleComparison cmp = verify ? verify_theorem2(members, e.spec, steps, dt, e.stride)
                                        : run_ensemble(members, e.spec, steps, dt, e.stride);

  const int n = e.problem.dim();
  std::vector<std::string> header = {"sample", "time"};
  for (int i = 0; i < n; ++i) header.push_back("x_" + std::to_string(i));
  const auto trajectory = [&](const std::vector<Vector>& xs) {
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      std::vector<double> row = {static_cast<double>(k), cmp.times[k]};
      for (int i = 0; i < n; ++i) row.push_back(xs[k][i]);
      rows.push_back(std::move(row));
    }
    return rows;
  };

  CommandResult result;
  const std::string en_path = output_path(config, "ensemble.csv");
  write_text_file(en_path, table_csv(header, trajectory(cmp.x_ensemble)));
  result.files.push_back(en_path);
  json& summary = result.report;
  summary["command"] = "ensemble";
  summary["config"] = config.flat();
  summary["members"] = members.size();
  summary["steps"] = steps;
  summary["mode"] = e.flow_mode ? "flow" : "discrete";
  summary["final_x_ensemble"] = to_json(cmp.final_ensemble.x_en);
  summary["rigidity_exact"] = cmp.rigidity_exact;
  summary["max_rigidity_error"] = cmp.max_rigidity_error;
  summary["verified"] = verify;
  bool passed = cmp.final_ensemble.x_en.allFinite();
  if (verify) {
    const std::string single_path = output_path(config, "single.csv");
    write_text_file(single_path, table_csv(header, trajectory(cmp.x_single)));
    std::vector<std::vector<double>> dev_rows;
    for (std::size_t k = 0; k < cmp.deviations.size(); ++k)
      dev_rows.push_back({static_cast<double>(k), cmp.times[k], cmp.deviations[k]});
    const std::string dev_path = output_path(config, "deviation.csv");
    write_text_file(dev_path, table_csv({"sample", "time", "deviation"}, dev_rows));
    result.files.push_back(single_path);
    result.files.push_back(dev_path);
    summary["max_deviation"] = cmp.max_deviation;
    summary["tolerance"] = tolerance;
    passed = passed && cmp.max_deviation <= tolerance;
  }
  summary["passed"] = passed;
  summary["wall_clock_seconds"] = elapsed_seconds(start);
  const std::string summary_path = output_path(config, "ensemble.json");
  write_text_file(summary_path, summary.dump(2) + "\n");
  result.files.push_back(summary_path);
  result.exit_code = passed ? kExitOk : kExitError;
  return result;
}

}  // namespace tmd::harness
