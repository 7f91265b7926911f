#include "tmd/feasible_set.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace tmd {

std::string to_string(SetKind kind) {
  switch (kind) {
    case SetKind::kWholeSpace:
      return "whole_space";
    case SetKind::kSimplex:
      return "simplex";
    case SetKind::kBox:
      return "box";
  }
  return "unknown";
}

FeasibleSet FeasibleSet::whole_space(int dim) {
  if (dim < 1) throw ConfigError("whole_space: dim must be positive");
  return FeasibleSet(SetKind::kWholeSpace, dim);
}

FeasibleSet FeasibleSet::simplex(int dim) {
  if (dim < 1) throw ConfigError("simplex: dim must be positive");
  return FeasibleSet(SetKind::kSimplex, dim);
}

FeasibleSet FeasibleSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() < 1)
    throw ConfigError("box: bound vectors must be nonempty and of equal length");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i]))
      throw ConfigError("box: lower bound exceeds upper bound at coordinate " + std::to_string(i));
  }
  FeasibleSet set(SetKind::kBox, static_cast<int>(lower.size()));
  set.lower_ = std::move(lower);
  set.upper_ = std::move(upper);
  return set;
}

Vector FeasibleSet::project(const Vector& v) const {
  if (v.size() != dim_) throw DomainError("project: dimension mismatch");
  switch (kind_) {
    case SetKind::kWholeSpace:
      return v;
    case SetKind::kSimplex:
      return project_simplex(v);
    case SetKind::kBox:
      return v.cwiseMax(lower_).cwiseMin(upper_);
  }
  return v;
}

bool FeasibleSet::contains(const Vector& v, double tol) const {
  if (v.size() != dim_ || !v.allFinite()) return false;
  switch (kind_) {
    case SetKind::kWholeSpace:
      return true;
    case SetKind::kSimplex:
      return v.minCoeff() >= -tol && std::abs(v.sum() - 1.0) <= tol;
    case SetKind::kBox:
      return ((v - lower_).array() >= -tol).all() && ((upper_ - v).array() >= -tol).all();
  }
  return false;
}

bool FeasibleSet::contains_interior(const Vector& v, double tol) const {
  if (v.size() != dim_ || !v.allFinite()) return false;
  switch (kind_) {
    case SetKind::kWholeSpace:
      return true;
    case SetKind::kSimplex:
      return v.minCoeff() > tol && std::abs(v.sum() - 1.0) <= 1e-9;
    case SetKind::kBox:
      return ((v - lower_).array() > tol).all() && ((upper_ - v).array() > tol).all();
  }
  return false;
}

Vector FeasibleSet::analytic_center() const {
  switch (kind_) {
    case SetKind::kWholeSpace:
      return Vector::Zero(dim_);
    case SetKind::kSimplex:
      return Vector::Constant(dim_, 1.0 / dim_);
    case SetKind::kBox:
      return 0.5 * (lower_ + upper_);
  }
  return Vector::Zero(dim_);
}

Vector FeasibleSet::sample(std::mt19937_64& rng, double scale) const {
  Vector x(dim_);
  switch (kind_) {
    case SetKind::kWholeSpace: {
      std::normal_distribution<double> normal(0.0, scale);
      for (int i = 0; i < dim_; ++i) x[i] = normal(rng);
      break;
    }
    case SetKind::kSimplex: {
      // Exponential spacings give Dirichlet(1, ..., 1).
      std::exponential_distribution<double> expo(1.0);
      for (int i = 0; i < dim_; ++i) x[i] = expo(rng) + 1e-300;
      x /= x.sum();
      break;
    }
    case SetKind::kBox: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int i = 0; i < dim_; ++i) x[i] = lower_[i] + unit(rng) * (upper_[i] - lower_[i]);
      break;
    }
  }
  return x;
}

Vector project_simplex(const Vector& v) {
  const auto n = v.size();
  if (n < 1) throw DomainError("project_simplex: empty vector");
  if (v.hasNaN()) throw DomainError("project_simplex: NaN input");
  if (!v.allFinite()) throw DomainError("project_simplex: non-finite input");

  std::vector<double> sorted(v.data(), v.data() + n);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) threshold = candidate;
  }
  return (v.array() - threshold).cwiseMax(0.0).matrix();
}

}  // namespace tmd
