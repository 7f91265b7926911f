#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tmd/geometry.hpp"
#include "tmd/problems.hpp"
#include "tmd/targets.hpp"
#include "tmd/types.hpp"

namespace tmd {

/// Dual state z, primal state x = grad h*(z), and the auxiliary filter state
/// xi used by the higher-order flow.
struct SolverState {
  long step_index = 0;
  double time = 0.0;
  Vector z;
  Vector x;
  std::optional<Vector> xi;
};

/// z0 = grad h(x0), x = grad h*(z0).
SolverState initial_state(const MirrorGeometry& geometry, const Vector& x0);
/// x = grad h*(z); used when no primal gradient is available (synthesized maps).
SolverState state_from_dual(const MirrorGeometry& geometry, const Vector& z);

/// alpha (S(T(x)) - S(x)) - beta Phi(x), together with T(x).
struct DualDrift {
  Vector increment;
  std::optional<Vector> target;  // absent when alpha == 0
};

DualDrift dual_drift(const TargetSpec& spec, const Vector& x);

/// Primal velocity d/dt grad h*(z) induced by the dual drift at x. Closed
/// forms: entropy (diag(x) - x x^T) z', quadratic whole-space maps z' ./ w.
Vector primal_velocity(const MirrorGeometry& geometry, const TargetSpec& spec, const Vector& x);

/// One iteration x+ = grad h*(grad h(x) + alpha (S(T(x)) - S(x)) - beta Phi(x)).
/// The dual base point is the geometry's canonical dual of the current z.
SolverState step_discrete(const MirrorGeometry& geometry, const TargetSpec& spec,
                          const SolverState& state);

enum class Integrator { kExplicitEuler, kRk4 };

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

/// Which right-hand side a flow integrates.
struct FlowModel {
  enum class Kind {
    kTmd,            // z' = alpha (S o T - S)(x) - beta Phi(x)
    kHigherOrder,    // adds -gamma1 (x - xi) to z', xi' = gamma2 (x - xi)
    kCalibratedDmd,  // z' = gamma (S(T(x)) - z)
    kVanillaDmd,     // z' = gamma (-F(x) - z)
  };
  Kind kind = Kind::kTmd;
  double gamma = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  VectorMap F;  // vanilla DMD only

  static FlowModel tmd() { return {}; }
  static FlowModel higher_order(double gamma1, double gamma2);
  static FlowModel calibrated_dmd(double gamma);
  static FlowModel vanilla_dmd(double gamma, VectorMap F);
};

/// One explicit Euler step of z' = gamma (S(T(x)) - z).
SolverState step_calibrated_dmd(const MirrorGeometry& geometry, const TargetSpec& spec,
                                const SolverState& state, double gamma, double dt);

/// One explicit Euler step of the vanilla discounted flow z' = gamma (-F(x) - z).
SolverState step_vanilla_dmd(const MirrorGeometry& geometry, const VIProblem& problem,
                             const SolverState& state, double gamma, double dt);

/// One explicit Euler step of the higher-order flow. xi defaults to x when unset.
SolverState step_higher_order(const MirrorGeometry& geometry, const TargetSpec& spec,
                              const SolverState& state, double gamma1, double gamma2, double dt);

enum class Termination { kConverged, kBudget, kNonFinite };

std::string to_string(Termination reason);

struct Sample {
  long step = 0;
  double time = 0.0;
  Vector x;
  double target_residual = 0.0;
  double natural_residual = 0.0;
  std::optional<double> lyapunov;
  std::optional<double> relaxed_condition;
};

struct RunRecord {
  std::vector<Sample> samples;
  Termination termination = Termination::kBudget;
  std::string message;
  std::optional<Integrator> integrator;  // empty for discrete runs
  double dt = 1.0;
  double alpha_sigma = 0.0;  // rate in the Lyapunov decrease bound
  SolverState final_state;
};

/// Options shared by discrete runs and flows.
struct RunOptions {
  long max_steps = 1000;           // discrete iterations or integrator steps
  int stride = 1;                  // sample every `stride` steps
  double stop_residual = 1e-8;     // converged when |T(x) - x| <= stop_residual
  std::optional<Vector> reference; // x-bar for Lyapunov and relaxed-condition columns
  // Natural residuals are measured at readout(x) when set (e.g. the DR shadow point).
  VectorMap readout;
};

struct FlowOptions {
  Integrator integrator = Integrator::kRk4;
  double dt = 1e-2;
  double t_end = 10.0;
  int stride = 10;
  double stop_residual = 1e-8;
  std::optional<Vector> reference;
  VectorMap readout;
  int max_halvings = 8;
  FlowModel model;
};

RunRecord run_discrete(const MirrorGeometry& geometry, const TargetSpec& spec,
                       const VIProblem& problem, SolverState state, const RunOptions& options);

RunRecord flow(const MirrorGeometry& geometry, const TargetSpec& spec, const VIProblem& problem,
               SolverState state, const FlowOptions& options);

/// alpha (sigma |T(x) - x|^2 + <Phi(T(x)), T(x) - x_bar>) + beta <Phi(x), x - x_bar>,
/// norms Euclidean.
double relaxed_condition_value(const TargetSpec& spec, const Vector& x, const Vector& x_bar);

struct LyapunovReport {
  std::vector<double> values;          // D_h(x_bar, x) per sample
  std::vector<std::size_t> violations; // sample indices k where V[k] - V[k-1] > band
  double band = 0.0;
  std::vector<double> decrease_bound;  // running integral of alpha sigma |T(x) - x|^2
  double total_decrease = 0.0;         // V[0] - V[last]
};

/// Allowed per-sample increase: 1e-9 for discrete runs, max(1e-9, 10 dt^2)
/// for Euler and max(1e-9, 10 dt^4) for RK4.
double lyapunov_band(const RunRecord& record);

LyapunovReport lyapunov_series(const RunRecord& record, const MirrorGeometry& geometry,
                               const Vector& reference);

}  // namespace tmd
