#include "tmd/targets.hpp"

#include <cmath>
#include <limits>
#include <type_traits>

namespace tmd {

namespace {

constexpr std::uint64_t kPresetCheckSeed = 0x5eedULL;
constexpr int kPresetCheckPairs = 256;
constexpr double kDefaultInnerStep = 1e-2;
constexpr int kMaxStepHalvings = 6;

// Sampled strong-monotonicity check used by the presets. Returns the
// smallest observed ratio (G(x)-G(y))^T(x-y) / |x-y|^2.
double require_strongly_monotone(const VectorMap& map, const FeasibleSet& set,
                                 const std::string& what) {
  const auto report = sample_monotonicity(map, set, kPresetCheckPairs, kPresetCheckSeed);
  if (report.verdict != MonotonicityVerdict::kConsistentStronglyMonotone) {
    throw ConfigError(what + " is not strongly monotone on sampled pairs (min ratio " +
                      std::to_string(report.min_ratio) + "); reduce the step size");
  }
  return report.min_ratio;
}

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw ConfigError(std::string(name) + " must be positive and finite");
}

void require_dims(const MirrorGeometry& geometry, const VIProblem& problem) {
  if (geometry.dim() != problem.dim())
    throw ConfigError("geometry dimension " + std::to_string(geometry.dim()) +
                      " does not match problem dimension " + std::to_string(problem.dim()));
}

Vector solve_resolvent(const TargetSpec& spec, const ResolventSolveTarget& rs,
                       const FeasibleSet& set, const Vector& x) {
  if (!spec.Phi) throw ConfigError("resolvent_solve target requires an explicit Phi");
  const Vector sx = spec.S(x);
  double tau = rs.step.value_or(kDefaultInnerStep);
  double last = std::numeric_limits<double>::infinity();

  for (int attempt = 0; attempt <= kMaxStepHalvings; ++attempt, tau *= 0.5) {
    Vector y = x;
    Vector w = sx;
    double first = -1.0;
    bool diverged = false;
    for (int it = 0; it < rs.max_iterations; ++it) {
      Vector next;
      if (rs.mirror) {
        w = (1.0 - tau) * w + tau * (sx - spec.Phi(y));
        next = rs.mirror->grad_h_conj(w);
      } else {
        next = set.project(y - tau * (spec.S(y) + spec.Phi(y) - sx));
      }
      const double diff = (next - y).norm();
      y = std::move(next);
      last = diff;
      if (first < 0.0) first = diff;
      if (!std::isfinite(diff) || diff > 1e6 * (first + 1e-12)) {
        diverged = true;
        break;
      }
      // diff / tau is the fixed-point residual of the inner map.
      if (diff <= rs.tol * tau) return y;
    }
    if (!diverged) break;
  }
  throw NonconvergenceError(
      "target inner solve did not converge (last step " + std::to_string(last) +
          "); the resolvent may be ill-posed or the inner step too large",
      last);
}

}  // namespace

Vector resolve_target(const TargetSpec& spec, const FeasibleSet& set, const Vector& x) {
  if (x.size() != set.dim()) throw DomainError("resolve_target: dimension mismatch");
  return std::visit(
      [&](const auto& strategy) -> Vector {
        using Strategy = std::decay_t<decltype(strategy)>;
        if constexpr (std::is_same_v<Strategy, ClosedFormTarget>) {
          Vector y = strategy.map(x);
          if (!y.allFinite()) throw NonFiniteError("closed-form target produced a non-finite point");
          return y;
        } else {
          return solve_resolvent(spec, strategy, set, x);
        }
      },
      spec.target);
}

Vector phi_at_target(const TargetSpec& spec, const Vector& x, const Vector& target) {
  if (spec.Phi) return spec.Phi(target);
  return spec.S(x) - spec.S(target);
}

SplitPair box_affine_split(const FeasibleSet& box, const Vector& shift) {
  if (box.dim() != shift.size()) throw ConfigError("box_affine_split: dimension mismatch");
  SplitPair pair;
  pair.resolvent_A = [box](double, const Vector& v) { return box.project(v); };
  pair.resolvent_B = [shift](double eta, const Vector& v) -> Vector {
    return (v + eta * shift) / (1.0 + eta);
  };
  pair.B_forward = [shift](const Vector& x) -> Vector { return x - shift; };
  pair.sum_strong_monotonicity = 1.0;
  pair.lipschitz_B = 1.0;
  const int n = box.dim();
  VIProblem problem{"box_affine_split", box, pair.B_forward, 1.0,
                    MonotonicityTag::kStronglyMonotone, 1.0, box.project(shift),
                    Matrix::Identity(n, n), -shift};
  pair.problem = std::move(problem);
  return pair;
}

TargetSpec preset_ppa(const MirrorGeometry& geometry, const VIProblem& problem, double eta) {
  require_positive(eta, "ppa eta");
  require_dims(geometry, problem);
  const auto F = problem.F;
  TargetSpec spec;
  spec.preset = "ppa";
  spec.alpha = 1.0;
  spec.beta = 0.0;
  spec.S = [geometry](const Vector& x) { return geometry.grad_h(x); };
  spec.Phi = [F, eta](const Vector& x) -> Vector { return eta * F(x); };
  spec.sigma = geometry.strong_convexity_modulus();
  spec.set = problem.set;
  require_strongly_monotone(
      [&](const Vector& x) -> Vector { return spec.S(x) + spec.Phi(x); }, problem.set,
      "grad h + eta F");
  ResolventSolveTarget rs;
  rs.mirror = geometry;
  const double ratio = eta * lipschitz_estimate(problem) / geometry.strong_convexity_modulus();
  rs.step = 1.0 / (1.0 + ratio);
  spec.target = rs;
  return spec;
}

TargetSpec preset_eg(const MirrorGeometry& geometry, const VIProblem& problem, double eta1,
                     double eta2) {
  require_positive(eta1, "eg eta1");
  require_positive(eta2, "eg eta2");
  require_dims(geometry, problem);
  const auto F = problem.F;
  TargetSpec spec;
  spec.preset = eta1 == eta2 ? "eg" : "eg_plus";
  spec.alpha = eta2 / eta1;
  spec.beta = 0.0;
  spec.S = [geometry, F, eta1](const Vector& x) -> Vector {
    return geometry.grad_h(x) - eta1 * F(x);
  };
  spec.Phi = [F, eta1](const Vector& x) -> Vector { return eta1 * F(x); };
  spec.set = problem.set;
  spec.sigma = require_strongly_monotone(spec.S, problem.set, "grad h - eta1 F");
  spec.target = ClosedFormTarget{[geometry, F, eta1](const Vector& x) -> Vector {
    return geometry.grad_h_conj(geometry.grad_h(x) - eta1 * F(x));
  }};
  return spec;
}

TargetSpec preset_dr(const SplitPair& split, const FeasibleSet& set, double eta) {
  require_positive(eta, "dr eta");
  if (set.kind() != SetKind::kWholeSpace)
    throw ConfigError("dr: the TMD set must be the whole space; absorb constraints into A or B");
  TargetSpec spec;
  spec.preset = "dr";
  spec.alpha = 1.0;
  spec.beta = 0.0;
  spec.S = [](const Vector& x) { return x; };
  spec.sigma = 1.0;
  spec.set = set;
  spec.target = ClosedFormTarget{[split, eta](const Vector& x) -> Vector {
    const Vector jb = split.resolvent_B(eta, x);
    return split.resolvent_A(eta, 2.0 * jb - x) + x - jb;
  }};
  return spec;
}

TargetSpec preset_fb(const SplitPair& split, const FeasibleSet& set, double eta) {
  require_positive(eta, "fb eta");
  if (set.kind() != SetKind::kWholeSpace)
    throw ConfigError("fb: the TMD set must be the whole space; absorb constraints into A or B");
  if (!split.sum_strong_monotonicity || !split.lipschitz_B)
    throw ConfigError("fb: the split pair must supply the modulus of A + B and the Lipschitz constant of B");
  const double sigma_bar = *split.sum_strong_monotonicity;
  const double l_bar = *split.lipschitz_B;
  if (l_bar > 0.0 && !(eta < 4.0 * sigma_bar / (l_bar * l_bar)))
    throw ConfigError("fb: eta must be below 4 sigma / L^2 = " +
                      std::to_string(4.0 * sigma_bar / (l_bar * l_bar)));
  TargetSpec spec;
  spec.preset = "fb";
  spec.alpha = 1.0;
  spec.beta = 0.0;
  spec.S = [](const Vector& x) { return x; };
  spec.sigma = 1.0;
  spec.set = set;
  spec.target = ClosedFormTarget{[split, eta](const Vector& x) -> Vector {
    return split.resolvent_A(eta, x - eta * split.B_forward(x));
  }};
  return spec;
}

TargetSpec preset_bnn(const VIProblem& problem, double eta) {
  require_positive(eta, "bnn eta");
  if (problem.set.kind() != SetKind::kSimplex)
    throw ConfigError("bnn: the problem set must be a simplex");
  const auto geometry = entropy_geometry(problem.dim());
  TargetSpec spec;
  spec.preset = "bnn";
  spec.alpha = 1.0 / eta;
  spec.beta = 0.0;
  spec.S = [geometry](const Vector& x) { return geometry.grad_h(x); };
  spec.sigma = geometry.strong_convexity_modulus();
  spec.set = problem.set;
  spec.target = ClosedFormTarget{[problem, eta](const Vector& x) -> Vector {
    const auto payoff = excess_payoff(problem, x);
    // x (+) b is invariant to rescaling b; shifting the exponent keeps b finite.
    const Vector scaled = eta * payoff.normalized;
    return aitchison_add(x, (scaled.array() - scaled.maxCoeff()).exp().matrix());
  }};
  return spec;
}

TargetSpec preset_fbf(const VIProblem& problem, double eta) {
  require_positive(eta, "fbf eta");
  const auto F = problem.F;
  const auto set = problem.set;
  TargetSpec spec;
  spec.preset = "fbf";
  spec.alpha = 1.0;
  spec.beta = 0.0;
  spec.S = [F, eta](const Vector& x) -> Vector { return x - eta * F(x); };
  spec.Phi = [F, eta](const Vector& x) -> Vector { return eta * F(x); };
  spec.set = set;
  spec.sigma = require_strongly_monotone(spec.S, set, "I - eta F");
  spec.target = ClosedFormTarget{[F, set, eta](const Vector& x) -> Vector {
    return set.project(x - eta * F(x));
  }};
  return spec;
}

TargetSpec preset_vanilla_md(const MirrorGeometry& geometry, const VIProblem& problem,
                             double eta) {
  if (!(eta != 0.0) || !std::isfinite(eta)) throw ConfigError("md eta must be nonzero and finite");
  require_dims(geometry, problem);
  const auto F = problem.F;
  TargetSpec spec;
  spec.preset = "md";
  spec.alpha = 0.0;
  spec.beta = 1.0;
  spec.S = [geometry](const Vector& x) { return geometry.grad_h(x); };
  spec.Phi = [F, eta](const Vector& x) -> Vector { return eta * F(x); };
  spec.sigma = geometry.strong_convexity_modulus();
  spec.set = problem.set;
  spec.target = ClosedFormTarget{[](const Vector& x) { return x; }};
  return spec;
}

TargetSpec preset_calibrated_dmd(const MirrorGeometry& geometry, const VIProblem& problem,
                                 double eta, double gamma, DmdCase which) {
  require_positive(gamma, "dmd gamma");
  TargetSpec spec;
  switch (which) {
    case DmdCase::kDualGradient:
      spec = preset_ppa(geometry, problem, eta);
      spec.alpha = gamma;
      spec.beta = 0.0;
      break;
    case DmdCase::kExtragradient:
      spec = preset_eg(geometry, problem, eta, eta);
      spec.alpha = gamma;
      spec.beta = gamma;
      break;
    case DmdCase::kNone:
      throw ConfigError("calibrated dmd: choose case 1 (dual gradient) or case 2 (extragradient)");
  }
  spec.preset = "dmd";
  spec.dmd_case = which;
  return spec;
}

Vector dr_shadow(const SplitPair& split, double eta, const Vector& z) {
  return split.resolvent_B(eta, z);
}

ExcessPayoff excess_payoff(const VIProblem& problem, const Vector& x) {
  if (problem.set.kind() != SetKind::kSimplex)
    throw DomainError("excess_payoff: the problem set must be a simplex");
  if (!problem.set.contains_interior(x))
    throw DomainError("excess_payoff: x must lie in the interior of the simplex");
  const Vector f = problem.F(x);
  const double average = x.dot(f);
  ExcessPayoff out;
  out.excess = (-(f.array() - average)).cwiseMax(0.0).matrix();
  out.normalized = out.excess.cwiseQuotient(x);
  return out;
}

Vector aitchison_add(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() == 0)
    throw DomainError("aitchison_add: operands must be nonempty and of equal length");
  if (!a.allFinite() || !b.allFinite() || a.minCoeff() <= 0.0 || b.minCoeff() <= 0.0)
    throw DomainError("aitchison_add: operands must be strictly positive");
  const Vector product = a.cwiseProduct(b);
  return product / product.sum();
}

Vector bnn_target_dual_shift(const VIProblem& problem, double eta, const Vector& x) {
  const auto geometry = entropy_geometry(problem.dim());
  const auto payoff = excess_payoff(problem, x);
  return geometry.grad_h_conj(geometry.grad_h(x) + eta * payoff.normalized);
}

}  // namespace tmd
