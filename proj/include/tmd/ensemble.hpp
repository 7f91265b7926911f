#pragma once

#include <optional>
#include <vector>

#include "tmd/dynamics.hpp"
#include "tmd/geometry.hpp"
#include "tmd/targets.hpp"
#include "tmd/types.hpp"

namespace tmd {

/// One ensemble member as configured: its mirror geometry and initial dual state.
struct MemberSpec {
  MirrorGeometry geometry;
  Vector z0;
};

/// Member state. The accumulated dual displacement is stored separately from
/// z0 so that every member receives bitwise-identical increments.
struct EnsembleMember {
  MirrorGeometry geometry;
  Vector z0;
  Vector displacement;  // z - z0
  Vector z;
  Vector x;
};

struct EnsembleState {
  std::vector<EnsembleMember> members;
  Vector x_en;  // arithmetic mean of member x
  long step_index = 0;
  double time = 0.0;
};

EnsembleState make_ensemble(const std::vector<MemberSpec>& members);

/// Applies the shared increment alpha (S(T(x_en)) - S(x_en)) - beta Phi(x_en)
/// to every member (scaled by dt when given, otherwise a discrete step).
EnsembleState ensemble_step(const EnsembleState& ensemble, const TargetSpec& spec,
                            std::optional<double> dt = std::nullopt);

/**
 * Mirror map of the single TMD the ensemble reduces to:
 *
 *   grad (h_en)*(z) = (1/N) sum_k grad (h_k)*(z + z0_k).
 *
 * Closed forms exist for two families: quadratic members on the whole space
 * (Euclidean or weighted), where the map is affine, and entropy members
 * sharing one simplex, where it is a mixture of shifted softmaxes. Anything
 * else throws UnsupportedError.
 */
MirrorGeometry synthesized_geometry(const std::vector<MemberSpec>& members);

struct EnsembleComparison {
  std::vector<double> times;
  std::vector<Vector> x_ensemble;
  std::vector<Vector> x_single;
  std::vector<double> deviations;  // |x_en - x_single| per sample
  double max_deviation = 0.0;
  bool rigidity_exact = true;      // all member displacements bitwise equal
  double max_rigidity_error = 0.0; // max |(z_i - z_j) - (z0_i - z0_j)|
  EnsembleState final_ensemble;
};

/// Runs the ensemble and the synthesized single TMD (started at z = 0) side
/// by side for `steps` steps; discrete when dt is empty, explicit Euler otherwise.
EnsembleComparison verify_theorem2(const std::vector<MemberSpec>& members,
                                   const TargetSpec& spec, long steps,
                                   std::optional<double> dt = std::nullopt, int stride = 1);

/// Ensemble trajectory only (no synthesized comparison).
EnsembleComparison run_ensemble(const std::vector<MemberSpec>& members, const TargetSpec& spec,
                                long steps, std::optional<double> dt = std::nullopt,
                                int stride = 1);

}  // namespace tmd
