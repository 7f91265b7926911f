#include "tmd/geometry.hpp"

#include <cmath>

namespace tmd {

std::string to_string(DomainTag tag) {
  switch (tag) {
    case DomainTag::kWholeSpace:
      return "whole_space";
    case DomainTag::kSimplex:
      return "simplex";
    case DomainTag::kBox:
      return "box";
    case DomainTag::kCustom:
      return "custom";
  }
  return "unknown";
}

std::string to_string(GeometryFamily family) {
  switch (family) {
    case GeometryFamily::kEuclidean:
      return "euclidean";
    case GeometryFamily::kEntropy:
      return "entropy";
    case GeometryFamily::kWeightedQuadratic:
      return "weighted_quadratic";
    case GeometryFamily::kSynthesized:
      return "synthesized";
  }
  return "unknown";
}

MirrorGeometry::MirrorGeometry(Parts parts) : parts_(std::move(parts)) {
  if (parts_.dim < 1) throw ConfigError("MirrorGeometry: dim must be positive");
  if (!parts_.grad_h_conj) throw ConfigError("MirrorGeometry: grad_h_conj is required");
  if (!(parts_.strong_convexity_modulus > 0.0))
    throw ConfigError("MirrorGeometry: strong convexity modulus must be positive");
}

void MirrorGeometry::check_dim(const Vector& v, const char* where) const {
  if (v.size() != parts_.dim)
    throw DomainError(std::string(where) + ": expected dimension " + std::to_string(parts_.dim) +
                      ", got " + std::to_string(v.size()));
}

double MirrorGeometry::eval_h(const Vector& x) const {
  check_dim(x, "eval_h");
  if (!parts_.eval_h) throw UnsupportedError("eval_h not available for geometry " + parts_.name);
  return parts_.eval_h(x);
}

Vector MirrorGeometry::grad_h(const Vector& x) const {
  check_dim(x, "grad_h");
  if (!parts_.grad_h) throw UnsupportedError("grad_h not available for geometry " + parts_.name);
  return parts_.grad_h(x);
}

Vector MirrorGeometry::grad_h_conj(const Vector& z) const {
  check_dim(z, "grad_h_conj");
  return parts_.grad_h_conj(z);
}

Vector MirrorGeometry::canonical_dual(const Vector& z) const {
  check_dim(z, "canonical_dual");
  return parts_.canonical_dual ? parts_.canonical_dual(z) : z;
}

bool MirrorGeometry::admits_gradient_at(const Vector& y) const {
  if (y.size() != parts_.dim || !y.allFinite()) return false;
  switch (parts_.family) {
    case GeometryFamily::kEntropy:
      return y.minCoeff() >= kEntropyInteriorFloor && std::abs(y.sum() - 1.0) <= 1e-9;
    default:
      return !parts_.domain || parts_.domain->contains(y);
  }
}

Vector softmax(const Vector& z) {
  const double shift = z.maxCoeff();
  Vector e = (z.array() - shift).exp().matrix();
  return e / e.sum();
}

MirrorGeometry euclidean_geometry(const FeasibleSet& set) {
  MirrorGeometry::Parts p;
  p.name = "euclidean";
  p.family = GeometryFamily::kEuclidean;
  p.dim = set.dim();
  p.domain = set;
  p.weights = Vector::Ones(set.dim());
  p.strong_convexity_modulus = 1.0;
  switch (set.kind()) {
    case SetKind::kWholeSpace:
      p.domain_tag = DomainTag::kWholeSpace;
      break;
    case SetKind::kSimplex:
      p.domain_tag = DomainTag::kSimplex;
      break;
    case SetKind::kBox:
      p.domain_tag = DomainTag::kBox;
      break;
  }
  p.eval_h = [set](const Vector& x) {
    if (!set.contains(x)) throw DomainError("euclidean eval_h: point outside the set");
    return 0.5 * x.squaredNorm();
  };
  p.grad_h = [set](const Vector& x) -> Vector {
    if (!set.contains(x)) throw DomainError("euclidean grad_h: point outside the set");
    return x;
  };
  p.grad_h_conj = [set](const Vector& z) { return set.project(z); };
  if (set.kind() != SetKind::kWholeSpace) {
    p.canonical_dual = [set](const Vector& z) { return set.project(z); };
  }
  return MirrorGeometry(std::move(p));
}

MirrorGeometry entropy_geometry(int dim) {
  if (dim < 2) throw ConfigError("entropy_geometry: dim must be at least 2");
  MirrorGeometry::Parts p;
  p.name = "entropy";
  p.family = GeometryFamily::kEntropy;
  p.domain_tag = DomainTag::kSimplex;
  p.dim = dim;
  p.domain = FeasibleSet::simplex(dim);
  // Pinsker: negative entropy is 1-strongly convex on the simplex (l1 norm,
  // hence also in l2).
  p.strong_convexity_modulus = 1.0;
  p.eval_h = [](const Vector& x) {
    if (x.minCoeff() < 0.0 || std::abs(x.sum() - 1.0) > 1e-9)
      throw DomainError("entropy eval_h: point outside the simplex");
    double h = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      if (x[i] > 0.0) h += x[i] * std::log(x[i]);
    }
    return h;
  };
  p.grad_h = [](const Vector& x) -> Vector {
    if (!x.allFinite() || x.minCoeff() < kEntropyInteriorFloor)
      throw DomainError("entropy grad_h: coordinate below the interiority floor");
    return (x.array().log() + 1.0).matrix();
  };
  p.grad_h_conj = [](const Vector& z) { return softmax(z); };
  return MirrorGeometry(std::move(p));
}

MirrorGeometry weighted_quadratic_geometry(const Vector& weights) {
  if (weights.size() < 1) throw ConfigError("weighted_quadratic_geometry: empty weights");
  if (!weights.allFinite() || weights.minCoeff() <= 0.0)
    throw ConfigError("weighted_quadratic_geometry: weights must be strictly positive");
  MirrorGeometry::Parts p;
  p.name = "weighted_quadratic";
  p.family = GeometryFamily::kWeightedQuadratic;
  p.domain_tag = DomainTag::kWholeSpace;
  p.dim = static_cast<int>(weights.size());
  p.domain = FeasibleSet::whole_space(p.dim);
  p.weights = weights;
  p.strong_convexity_modulus = weights.minCoeff();
  p.eval_h = [weights](const Vector& x) {
    return 0.5 * (weights.array() * x.array().square()).sum();
  };
  p.grad_h = [weights](const Vector& x) -> Vector { return weights.cwiseProduct(x); };
  p.grad_h_conj = [weights](const Vector& z) -> Vector { return z.cwiseQuotient(weights); };
  return MirrorGeometry(std::move(p));
}

double bregman(const MirrorGeometry& geometry, const Vector& x, const Vector& y) {
  if (!geometry.admits_gradient_at(y))
    throw DomainError("bregman: second argument outside the interior of the domain");
  if (x.size() != y.size()) throw DomainError("bregman: dimension mismatch");
  // Closed forms avoid the cancellation in h(x) - h(y) near x = y.
  switch (geometry.family()) {
    case GeometryFamily::kEuclidean:
    case GeometryFamily::kWeightedQuadratic: {
      geometry.eval_h(x);  // domain check
      const Vector d = x - y;
      return 0.5 * (geometry.weights()->array() * d.array().square()).sum();
    }
    case GeometryFamily::kEntropy: {
      geometry.eval_h(x);  // domain check
      double kl = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0) kl += x[i] * std::log(x[i] / y[i]);
        kl += y[i] - x[i];
      }
      return kl;
    }
    case GeometryFamily::kSynthesized:
      break;
  }
  return geometry.eval_h(x) - geometry.eval_h(y) - geometry.grad_h(y).dot(x - y);
}

}  // namespace tmd
