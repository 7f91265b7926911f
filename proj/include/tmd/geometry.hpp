#pragma once

#include <optional>
#include <string>

#include "tmd/feasible_set.hpp"
#include "tmd/types.hpp"

namespace tmd {

enum class DomainTag { kWholeSpace, kSimplex, kBox, kCustom };

enum class GeometryFamily { kEuclidean, kEntropy, kWeightedQuadratic, kSynthesized };

std::string to_string(DomainTag tag);
std::string to_string(GeometryFamily family);

/// Smallest coordinate accepted by the entropy gradient log(x) + 1.
/// See grad_h of entropy_geometry.
inline constexpr double kEntropyInteriorFloor = 2.2250738585072014e-308;

/**
 * Primal/dual geometry induced by a strictly convex h: the value h, its
 * gradient (primal -> dual), and the mirror map grad h* (dual -> primal).
 *
 * Geometries are immutable value types; all members are pure functions.
 */
class MirrorGeometry {
 public:
  struct Parts {
    std::string name;
    GeometryFamily family = GeometryFamily::kEuclidean;
    DomainTag domain_tag = DomainTag::kWholeSpace;
    int dim = 0;
    ScalarMap eval_h;
    VectorMap grad_h;
    VectorMap grad_h_conj;
    double strong_convexity_modulus = 1.0;
    // Optional pieces used by specific families.
    std::optional<FeasibleSet> domain;   // set the mirror map projects into
    std::optional<Vector> weights;       // diagonal Hessian for quadratic families
    VectorMap canonical_dual;            // defaults to the identity
  };

  explicit MirrorGeometry(Parts parts);

  const std::string& name() const { return parts_.name; }
  GeometryFamily family() const { return parts_.family; }
  DomainTag domain_tag() const { return parts_.domain_tag; }
  int dim() const { return parts_.dim; }
  double strong_convexity_modulus() const { return parts_.strong_convexity_modulus; }
  const std::optional<FeasibleSet>& domain() const { return parts_.domain; }
  const std::optional<Vector>& weights() const { return parts_.weights; }

  double eval_h(const Vector& x) const;
  Vector grad_h(const Vector& x) const;
  Vector grad_h_conj(const Vector& z) const;

  /// Dual representative of the primal point grad_h_conj(z). For projection
  /// geometries this is grad_h(grad_h_conj(z)); for the others z itself is
  /// already consistent (softmax is invariant to shifts along the ones vector).
  Vector canonical_dual(const Vector& z) const;

  /// Whether y is an admissible second argument of the Bregman divergence.
  bool admits_gradient_at(const Vector& y) const;

 private:
  void check_dim(const Vector& v, const char* where) const;

  Parts parts_;
};

/// h = 1/2 |x|^2 restricted to the set; the mirror map is the projection.
MirrorGeometry euclidean_geometry(const FeasibleSet& set);

/// Negative entropy on the simplex; the mirror map is softmax.
MirrorGeometry entropy_geometry(int dim);

/// h = 1/2 sum w_i x_i^2 on the whole space.
MirrorGeometry weighted_quadratic_geometry(const Vector& weights);

/// D_h(x, y) = h(x) - h(y) - <grad h(y), x - y>.
double bregman(const MirrorGeometry& geometry, const Vector& x, const Vector& y);

/// Numerically stable exp(z) / sum exp(z).
Vector softmax(const Vector& z);

}  // namespace tmd
