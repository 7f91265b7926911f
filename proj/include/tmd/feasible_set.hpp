#pragma once

#include <random>
#include <string>

#include "tmd/types.hpp"

namespace tmd {

enum class SetKind { kWholeSpace, kSimplex, kBox };

std::string to_string(SetKind kind);

/// Closed convex feasible set with a Euclidean projection. The projection
/// plays the role of the resolvent of the normal cone, (I + N_X)^{-1}.
class FeasibleSet {
 public:
  static FeasibleSet whole_space(int dim);
  static FeasibleSet simplex(int dim);
  static FeasibleSet box(Vector lower, Vector upper);

  int dim() const { return dim_; }
  SetKind kind() const { return kind_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }

  Vector project(const Vector& v) const;
  bool contains(const Vector& v, double tol = 1e-9) const;
  /// True when v is strictly inside the set (relative interior for the simplex).
  bool contains_interior(const Vector& v, double tol = 0.0) const;

  /// Uniform on the simplex and box, origin on the whole space.
  Vector analytic_center() const;

  /// Random feasible point. Simplex samples are Dirichlet(1) and therefore
  /// interior; whole-space samples are standard normal scaled by `scale`.
  Vector sample(std::mt19937_64& rng, double scale = 1.0) const;

 private:
  FeasibleSet(SetKind kind, int dim) : kind_(kind), dim_(dim) {}

  SetKind kind_;
  int dim_;
  Vector lower_;
  Vector upper_;
};

/// Euclidean projection onto the probability simplex (sorted-threshold method).
Vector project_simplex(const Vector& v);

}  // namespace tmd
