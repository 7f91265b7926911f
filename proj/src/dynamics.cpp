#include "tmd/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace tmd {

std::string to_string(Integrator integrator) {
  switch (integrator) {
    case Integrator::kExplicitEuler:
      return "explicit_euler";
    case Integrator::kRk4:
      return "rk4";
  }
  return "unknown";
}

Integrator integrator_from_string(const std::string& name) {
  if (name == "explicit_euler" || name == "euler") return Integrator::kExplicitEuler;
  if (name == "rk4") return Integrator::kRk4;
  throw ConfigError("unknown integrator '" + name + "' (expected explicit_euler or rk4)");
}

std::string to_string(Termination reason) {
  switch (reason) {
    case Termination::kConverged:
      return "converged";
    case Termination::kBudget:
      return "budget";
    case Termination::kNonFinite:
      return "non_finite";
  }
  return "unknown";
}

FlowModel FlowModel::higher_order(double gamma1, double gamma2) {
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
    throw ConfigError("higher-order flow: gamma1 and gamma2 must be positive");
  FlowModel m;
  m.kind = Kind::kHigherOrder;
  m.gamma1 = gamma1;
  m.gamma2 = gamma2;
  return m;
}

FlowModel FlowModel::calibrated_dmd(double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("dmd: gamma must be positive");
  FlowModel m;
  m.kind = Kind::kCalibratedDmd;
  m.gamma = gamma;
  return m;
}

FlowModel FlowModel::vanilla_dmd(double gamma, VectorMap F) {
  if (!(gamma > 0.0)) throw ConfigError("dmd: gamma must be positive");
  FlowModel m;
  m.kind = Kind::kVanillaDmd;
  m.gamma = gamma;
  m.F = std::move(F);
  return m;
}

SolverState initial_state(const MirrorGeometry& geometry, const Vector& x0) {
  SolverState s;
  s.z = geometry.grad_h(x0);
  s.x = geometry.grad_h_conj(s.z);
  return s;
}

SolverState state_from_dual(const MirrorGeometry& geometry, const Vector& z) {
  SolverState s;
  s.z = z;
  s.x = geometry.grad_h_conj(z);
  return s;
}

DualDrift dual_drift(const TargetSpec& spec, const Vector& x) {
  DualDrift drift;
  drift.increment = Vector::Zero(x.size());
  if (spec.alpha != 0.0) {
    Vector target = resolve_target(spec, x);
    drift.increment += spec.alpha * (spec.S(target) - spec.S(x));
    drift.target = std::move(target);
  }
  if (spec.beta != 0.0) {
    if (!spec.Phi) throw ConfigError("beta > 0 requires an explicit Phi");
    drift.increment -= spec.beta * spec.Phi(x);
  }
  return drift;
}

Vector primal_velocity(const MirrorGeometry& geometry, const TargetSpec& spec, const Vector& x) {
  const Vector dz = dual_drift(spec, x).increment;
  switch (geometry.family()) {
    case GeometryFamily::kEntropy:
      return x.cwiseProduct(dz) - x * x.dot(dz);
    case GeometryFamily::kWeightedQuadratic:
      return dz.cwiseQuotient(*geometry.weights());
    case GeometryFamily::kEuclidean:
      if (geometry.domain_tag() == DomainTag::kWholeSpace) return dz;
      break;
    case GeometryFamily::kSynthesized:
      break;
  }
  throw UnsupportedError("primal_velocity: no closed-form Jacobian for geometry " + geometry.name());
}

SolverState step_discrete(const MirrorGeometry& geometry, const TargetSpec& spec,
                          const SolverState& state) {
  const auto drift = dual_drift(spec, state.x);
  SolverState next = state;
  next.z = geometry.canonical_dual(state.z) + drift.increment;
  next.x = geometry.grad_h_conj(next.z);
  next.step_index += 1;
  next.time += 1.0;
  return next;
}

namespace {

// Augmented state: z, followed by xi for the higher-order model.
struct Augmented {
  const MirrorGeometry& geometry;
  const TargetSpec& spec;
  const FlowModel& model;
  int n;

  bool has_xi() const { return model.kind == FlowModel::Kind::kHigherOrder; }

  Vector pack(const SolverState& s) const {
    if (!has_xi()) return s.z;
    Vector y(2 * n);
    y << s.z, s.xi.value_or(s.x);
    return y;
  }

  Vector rhs(const Vector& y) const {
    const Vector z = y.head(n);
    const Vector x = geometry.grad_h_conj(z);
    Vector dy(y.size());
    switch (model.kind) {
      case FlowModel::Kind::kTmd:
        dy = dual_drift(spec, x).increment;
        break;
      case FlowModel::Kind::kHigherOrder: {
        const Vector xi = y.tail(n);
        dy.head(n) = dual_drift(spec, x).increment - model.gamma1 * (x - xi);
        dy.tail(n) = model.gamma2 * (x - xi);
        break;
      }
      case FlowModel::Kind::kCalibratedDmd:
        dy = model.gamma * (spec.S(resolve_target(spec, x)) - z);
        break;
      case FlowModel::Kind::kVanillaDmd:
        dy = model.gamma * (-model.F(x) - z);
        break;
    }
    return dy;
  }

  SolverState unpack(const Vector& y, const SolverState& prev, double dt) const {
    SolverState s = prev;
    s.z = y.head(n);
    s.x = geometry.grad_h_conj(s.z);
    if (has_xi()) s.xi = Vector(y.tail(n));
    s.step_index += 1;
    s.time += dt;
    return s;
  }

  Vector advance(const Vector& y, double dt, Integrator integrator) const {
    if (integrator == Integrator::kExplicitEuler) return y + dt * rhs(y);
    const Vector k1 = rhs(y);
    const Vector k2 = rhs(y + 0.5 * dt * k1);
    const Vector k3 = rhs(y + 0.5 * dt * k2);
    const Vector k4 = rhs(y + dt * k3);
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
};

SolverState euler_step(const MirrorGeometry& geometry, const TargetSpec& spec,
                       const FlowModel& model, const SolverState& state, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  const Augmented aug{geometry, spec, model, static_cast<int>(state.z.size())};
  return aug.unpack(aug.advance(aug.pack(state), dt, Integrator::kExplicitEuler), state, dt);
}

double stopping_residual(const TargetSpec& spec, const VIProblem& problem,
                         const VectorMap& readout, const SolverState& state,
                         const FlowModel::Kind kind) {
  double residual;
  if (spec.alpha != 0.0 && kind != FlowModel::Kind::kVanillaDmd) {
    residual = (resolve_target(spec, state.x) - state.x).norm();
  } else {
    residual = natural_residual(problem, readout ? readout(state.x) : state.x);
  }
  if (kind == FlowModel::Kind::kHigherOrder && state.xi)
    residual = std::max(residual, (state.x - *state.xi).norm());
  return residual;
}

Sample make_sample(const MirrorGeometry& geometry, const TargetSpec& spec,
                   const VIProblem& problem, const std::optional<Vector>& reference,
                   const VectorMap& readout, const SolverState& state) {
  Sample s;
  s.step = state.step_index;
  s.time = state.time;
  s.x = state.x;
  s.target_residual =
      spec.alpha != 0.0 ? (resolve_target(spec, state.x) - state.x).norm() : 0.0;
  s.natural_residual = natural_residual(problem, readout ? readout(state.x) : state.x);
  if (reference) {
    if (geometry.family() != GeometryFamily::kSynthesized)
      s.lyapunov = bregman(geometry, *reference, state.x);
    s.relaxed_condition = relaxed_condition_value(spec, state.x, *reference);
  }
  return s;
}

}  // namespace

SolverState step_calibrated_dmd(const MirrorGeometry& geometry, const TargetSpec& spec,
                                const SolverState& state, double gamma, double dt) {
  if (spec.dmd_case == DmdCase::kNone)
    throw ConfigError("step_calibrated_dmd: spec is not a calibrated DMD preset");
  return euler_step(geometry, spec, FlowModel::calibrated_dmd(gamma), state, dt);
}

SolverState step_vanilla_dmd(const MirrorGeometry& geometry, const VIProblem& problem,
                             const SolverState& state, double gamma, double dt) {
  static const TargetSpec unused;
  return euler_step(geometry, unused, FlowModel::vanilla_dmd(gamma, problem.F), state, dt);
}

SolverState step_higher_order(const MirrorGeometry& geometry, const TargetSpec& spec,
                              const SolverState& state, double gamma1, double gamma2, double dt) {
  return euler_step(geometry, spec, FlowModel::higher_order(gamma1, gamma2), state, dt);
}

RunRecord run_discrete(const MirrorGeometry& geometry, const TargetSpec& spec,
                       const VIProblem& problem, SolverState state, const RunOptions& options) {
  if (options.stride < 1) throw ConfigError("stride must be at least 1");
  if (options.max_steps < 0) throw ConfigError("step budget must be nonnegative");
  RunRecord record;
  record.alpha_sigma = spec.alpha * spec.sigma;
  const auto sample = [&](const SolverState& s) {
    record.samples.push_back(
        make_sample(geometry, spec, problem, options.reference, options.readout, s));
  };
  sample(state);
  record.termination = Termination::kBudget;
  for (long k = 0; k < options.max_steps; ++k) {
    if (stopping_residual(spec, problem, options.readout, state, FlowModel::Kind::kTmd) <=
        options.stop_residual) {
      record.termination = Termination::kConverged;
      break;
    }
    SolverState next = step_discrete(geometry, spec, state);
    if (!next.z.allFinite() || !next.x.allFinite()) {
      record.termination = Termination::kNonFinite;
      record.message = "non-finite state at step " + std::to_string(next.step_index);
      break;
    }
    state = std::move(next);
    if (state.step_index % options.stride == 0) sample(state);
    if (k + 1 == options.max_steps &&
        stopping_residual(spec, problem, options.readout, state, FlowModel::Kind::kTmd) <=
            options.stop_residual) {
      record.termination = Termination::kConverged;
    }
  }
  if (record.samples.back().step != state.step_index) sample(state);
  record.final_state = std::move(state);
  return record;
}

RunRecord flow(const MirrorGeometry& geometry, const TargetSpec& spec, const VIProblem& problem,
               SolverState state, const FlowOptions& options) {
  if (!(options.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(options.t_end >= 0.0)) throw ConfigError("t_end must be nonnegative");
  if (options.stride < 1) throw ConfigError("stride must be at least 1");
  const FlowModel& model = options.model;
  const Augmented aug{geometry, spec, model, static_cast<int>(state.z.size())};
  if (aug.has_xi() && !state.xi) state.xi = state.x;

  RunRecord record;
  record.integrator = options.integrator;
  record.dt = options.dt;
  record.alpha_sigma = spec.alpha * spec.sigma;
  const auto sample = [&](const SolverState& s) {
    record.samples.push_back(
        make_sample(geometry, spec, problem, options.reference, options.readout, s));
  };
  sample(state);

  double dt = options.dt;
  int halvings = 0;
  record.termination = Termination::kBudget;
  const double t_tol = 1e-12 * std::max(1.0, options.t_end);
  while (state.time < options.t_end - t_tol) {
    if (stopping_residual(spec, problem, options.readout, state, model.kind) <=
        options.stop_residual) {
      record.termination = Termination::kConverged;
      break;
    }
    const double h = std::min(dt, options.t_end - state.time);
    const Vector y = aug.advance(aug.pack(state), h, options.integrator);
    SolverState next;
    bool finite = y.allFinite();
    if (finite) {
      next = aug.unpack(y, state, h);
      finite = next.x.allFinite();
    }
    if (!finite) {
      if (halvings >= options.max_halvings) {
        record.termination = Termination::kNonFinite;
        record.message = "non-finite state at t = " + std::to_string(state.time) +
                         " after " + std::to_string(halvings) + " step halvings";
        break;
      }
      ++halvings;
      dt *= 0.5;
      record.dt = dt;
      continue;
    }
    state = std::move(next);
    if (state.step_index % options.stride == 0) sample(state);
  }
  if (record.termination == Termination::kBudget &&
      stopping_residual(spec, problem, options.readout, state, model.kind) <=
          options.stop_residual) {
    record.termination = Termination::kConverged;
  }
  if (record.samples.back().step != state.step_index) sample(state);
  record.final_state = std::move(state);
  return record;
}

double relaxed_condition_value(const TargetSpec& spec, const Vector& x, const Vector& x_bar) {
  double value = 0.0;
  if (spec.alpha != 0.0) {
    const Vector target = resolve_target(spec, x);
    const Vector phi_t = phi_at_target(spec, x, target);
    value += spec.alpha *
             (spec.sigma * (target - x).squaredNorm() + phi_t.dot(target - x_bar));
  }
  if (spec.beta != 0.0) {
    if (!spec.Phi) throw ConfigError("beta > 0 requires an explicit Phi");
    value += spec.beta * spec.Phi(x).dot(x - x_bar);
  }
  return value;
}

double lyapunov_band(const RunRecord& record) {
  if (!record.integrator) return 1e-9;
  const double dt = record.dt;
  if (*record.integrator == Integrator::kExplicitEuler) return std::max(1e-9, 10.0 * dt * dt);
  return std::max(1e-9, 10.0 * dt * dt * dt * dt);
}

LyapunovReport lyapunov_series(const RunRecord& record, const MirrorGeometry& geometry,
                               const Vector& reference) {
  LyapunovReport report;
  report.band = lyapunov_band(record);
  report.values.reserve(record.samples.size());
  double integral = 0.0;
  for (std::size_t k = 0; k < record.samples.size(); ++k) {
    const Sample& s = record.samples[k];
    report.values.push_back(bregman(geometry, reference, s.x));
    if (k > 0) {
      const Sample& prev = record.samples[k - 1];
      const double span = s.time - prev.time;
      const double r0 = prev.target_residual * prev.target_residual;
      const double r1 = s.target_residual * s.target_residual;
      // Discrete runs: one term per iteration at the pre-step state.
      integral += record.integrator ? 0.5 * span * (r0 + r1) * record.alpha_sigma
                                    : span * r0 * record.alpha_sigma;
      if (report.values[k] - report.values[k - 1] > report.band) report.violations.push_back(k);
    }
    report.decrease_bound.push_back(integral);
  }
  if (!report.values.empty()) report.total_decrease = report.values.front() - report.values.back();
  return report;
}

}  // namespace tmd
