#pragma once

#include <optional>
#include <string>
#include <variant>

#include "tmd/geometry.hpp"
#include "tmd/problems.hpp"
#include "tmd/types.hpp"

namespace tmd {

/// T evaluated by a stored function.
struct ClosedFormTarget {
  VectorMap map;
};

/// T(x) = (S + Phi + N_X)^{-1}(S(x)) evaluated by an inner fixed-point solve.
struct ResolventSolveTarget {
  double tol = 1e-10;  // on the inner fixed-point residual |y+ - y| / tau
  int max_iterations = 10000;
  std::optional<double> step;  // inner step tau; 1e-2 with backoff when unset
  // When S is the gradient of a mirror geometry the iteration runs in that
  // geometry's dual space: w <- (1 - tau) w + tau (S(x) - Phi(y)), y = grad h*(w).
  // For the Euclidean geometry this is exactly the projected iteration.
  std::optional<MirrorGeometry> mirror;
};

using TargetStrategy = std::variant<ClosedFormTarget, ResolventSolveTarget>;

/// Which of the two calibrated-DMD parameterizations a spec instantiates.
enum class DmdCase { kNone, kDualGradient, kExtragradient };

/**
 * The design tuple (alpha, beta, S, Phi, T) driving
 *
 *   z' = alpha (S(T(x)) - S(x)) - beta Phi(x),   x = grad h*(z).
 *
 * Phi may be left empty when it is only defined implicitly through T (the
 * splitting presets and BNN); wherever Phi(T(x)) is needed the identity
 * Phi(T(x)) = S(x) - S(T(x)) is used, which holds whenever T(x) is interior.
 */
struct TargetSpec {
  std::string preset;
  double alpha = 1.0;
  double beta = 0.0;
  VectorMap S;
  double sigma = 1.0;  // strong monotonicity modulus of S (Euclidean norm)
  VectorMap Phi;
  TargetStrategy target;
  FeasibleSet set = FeasibleSet::whole_space(1);
  DmdCase dmd_case = DmdCase::kNone;

  bool has_explicit_phi() const { return static_cast<bool>(Phi); }
};

/// Solve T(x). Throws NonconvergenceError when the inner solver runs out of
/// iterations after exhausting step backoff.
Vector resolve_target(const TargetSpec& spec, const FeasibleSet& set, const Vector& x);
inline Vector resolve_target(const TargetSpec& spec, const Vector& x) {
  return resolve_target(spec, spec.set, x);
}

/// Phi(T(x)) given x and T(x); uses the implicit identity when Phi is absent.
Vector phi_at_target(const TargetSpec& spec, const Vector& x, const Vector& target);

/// Resolvents J_{eta A}, J_{eta B} and the forward map of B for F = A + B.
struct SplitPair {
  std::function<Vector(double, const Vector&)> resolvent_A;
  std::function<Vector(double, const Vector&)> resolvent_B;
  VectorMap B_forward;
  // Constants for the forward-backward step bound, when known.
  std::optional<double> sum_strong_monotonicity;  // of A + B
  std::optional<double> lipschitz_B;
  // The VI solved by the pair; residuals of the shadow point are measured here.
  std::optional<VIProblem> problem;
};

/// A = N_box (resolvent = clamp), B(x) = x - shift. Solves VI(box, x - shift).
SplitPair box_affine_split(const FeasibleSet& box, const Vector& shift);

TargetSpec preset_ppa(const MirrorGeometry& geometry, const VIProblem& problem, double eta);
TargetSpec preset_eg(const MirrorGeometry& geometry, const VIProblem& problem, double eta1,
                     double eta2);
TargetSpec preset_dr(const SplitPair& split, const FeasibleSet& set, double eta);
TargetSpec preset_fb(const SplitPair& split, const FeasibleSet& set, double eta);
TargetSpec preset_bnn(const VIProblem& problem, double eta);
TargetSpec preset_fbf(const VIProblem& problem, double eta);

/// Vanilla mirror descent: alpha = 0, beta = 1, Phi = eta F, T = identity.
TargetSpec preset_vanilla_md(const MirrorGeometry& geometry, const VIProblem& problem,
                             double eta);

/// Calibrated discounted mirror descent. kDualGradient: alpha = gamma,
/// beta = 0, S = grad h. kExtragradient: alpha = beta = gamma, S = grad h - eta F.
/// Both use Phi = eta F.
TargetSpec preset_calibrated_dmd(const MirrorGeometry& geometry, const VIProblem& problem,
                                 double eta, double gamma, DmdCase which);

/// Shadow point J_{eta B}(z) of a Douglas-Rachford governing iterate.
Vector dr_shadow(const SplitPair& split, double eta, const Vector& z);

struct ExcessPayoff {
  Vector excess;      // [-F_hat(x)]_+
  Vector normalized;  // excess / x entrywise
};

/// Excess payoff of the cost F at an interior point of the simplex, with
/// F_hat = F - (x^T F(x)) 1.
ExcessPayoff excess_payoff(const VIProblem& problem, const Vector& x);

/// a (+) b = (a_i b_i) / sum_k a_k b_k.
Vector aitchison_add(const Vector& a, const Vector& b);

/// BNN target via the dual shift grad h*(grad h(x) + eta * normalized excess).
Vector bnn_target_dual_shift(const VIProblem& problem, double eta, const Vector& x);

}  // namespace tmd
