#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tmd/feasible_set.hpp"
#include "tmd/types.hpp"

namespace tmd {

enum class MonotonicityTag { kStronglyMonotone, kMonotone, kPseudoMonotone, kUnknown };

std::string to_string(MonotonicityTag tag);

/// VI(X, F): find x* in X with <F(x*), u - x*> >= 0 for all u in X.
struct VIProblem {
  std::string name;
  FeasibleSet set;
  VectorMap F;
  std::optional<double> lipschitz_hint;
  MonotonicityTag monotonicity = MonotonicityTag::kUnknown;
  double strong_monotonicity = 0.0;  // sigma when tagged strongly monotone
  std::optional<Vector> known_solution;
  // Affine operators F(x) = M x + q keep their data for Lipschitz estimation
  // and closed-form references.
  std::optional<Matrix> linear_part;
  std::optional<Vector> offset;

  int dim() const { return set.dim(); }
};

/// Parameters accepted by library_problem. Fields a problem does not use are
/// ignored; unset fields take the documented defaults.
struct ProblemParams {
  std::optional<int> dim;
  std::optional<double> shift;                // scalar_shift: a (default 2)
  std::optional<Vector> costs;                // vertex_cost_simplex: c (default (1, 2))
  std::optional<double> box_lower;            // constrained_quadratic (default -1)
  std::optional<double> box_upper;            // constrained_quadratic (default 1)
  std::uint64_t seed = 7;                     // linear_monotone data
};

/// Names accepted by library_problem, in listing order.
const std::vector<std::string>& library_problem_names();

/**
 * Built-in monotone test problems:
 *  - skew_bilinear: F(x) = M x, M skew-symmetric tridiagonal, whole space.
 *  - linear_monotone: F(x) = M x + q with M = G G^T / n + K (K skew), whole space.
 *  - rps_game: rock-paper-scissors cost F(x) = A x on the 3-simplex.
 *  - constrained_quadratic: F(x) = Q x + q, Q SPD tridiagonal, on a box,
 *    with an interior solution.
 *  - vertex_cost_simplex: constant F = c on the simplex.
 *  - scalar_shift: F(x) = x - a on the real line.
 */
VIProblem library_problem(const std::string& name, const ProblemParams& params = {});

/// |x - P_X(x - F(x))|_2.
double natural_residual(const VIProblem& problem, const Vector& x);

enum class MonotonicityVerdict { kRefuted, kConsistentMonotone, kConsistentStronglyMonotone };

std::string to_string(MonotonicityVerdict verdict);

/// Sampled evidence about (G(x) - G(y))^T (x - y). Sampling can only refute;
/// a non-refuted verdict means "consistent with", never "certified".
struct MonotonicityReport {
  int pairs = 0;
  double min_inner = 0.0;  // min (G(x)-G(y))^T(x-y)
  double min_ratio = 0.0;  // min of the same divided by |x-y|^2
  MonotonicityVerdict verdict = MonotonicityVerdict::kConsistentMonotone;
  std::optional<std::pair<Vector, Vector>> witness;  // pair attaining min_inner when refuted
};

inline constexpr double kMonotonicityTolerance = -1e-9;

MonotonicityReport sample_monotonicity(const VectorMap& map, const FeasibleSet& set,
                                       int n_samples, std::uint64_t rng_seed,
                                       double sample_scale = 1.0);

MonotonicityReport check_monotonicity(const VIProblem& problem, int n_samples,
                                      std::uint64_t rng_seed);

/// Lipschitz constant of F: the hint if present, else power iteration on the
/// linear part (50 iterations), else twice the largest sampled difference quotient.
double lipschitz_estimate(const VIProblem& problem, std::uint64_t rng_seed = 0);

}  // namespace tmd
