#include "tmd/reference.hpp"

#include <Eigen/LU>

#include <cmath>

namespace tmd::reference {

namespace {

Vector normalize_positive(Vector v) { return v / v.sum(); }

}  // namespace

Vector ppa_affine_step(const VIProblem& problem, double eta, const Vector& x) {
  if (!problem.linear_part || !problem.offset)
    throw UnsupportedError("ppa reference needs an affine operator");
  if (problem.set.kind() != SetKind::kWholeSpace)
    throw UnsupportedError("ppa reference is unconstrained");
  const Matrix& m = *problem.linear_part;
  const Matrix lhs = Matrix::Identity(m.rows(), m.cols()) + eta * m;
  return lhs.partialPivLu().solve(x - eta * *problem.offset);
}

Vector ppa_entropic_constant_step(const VIProblem& problem, double eta, const Vector& x) {
  if (!problem.linear_part || !problem.linear_part->isZero(0.0) || !problem.offset)
    throw UnsupportedError("entropic ppa reference needs a constant operator");
  const Vector& c = *problem.offset;
  Vector y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) y[i] = x[i] * std::exp(-eta * c[i]);
  return normalize_positive(std::move(y));
}

Vector eg_projected_step(const VIProblem& problem, double eta1, double eta2, const Vector& x) {
  const Vector w = problem.set.project(x - eta1 * problem.F(x));
  return problem.set.project(x - eta2 * problem.F(w));
}

Vector eg_entropic_step(const VIProblem& problem, double eta1, double eta2, const Vector& x) {
  const Vector fx = problem.F(x);
  Vector w(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) w[i] = x[i] * std::exp(-eta1 * fx[i]);
  w = normalize_positive(std::move(w));
  const Vector fw = problem.F(w);
  Vector next(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) next[i] = x[i] * std::exp(-eta2 * fw[i]);
  return normalize_positive(std::move(next));
}

Vector dr_step(const SplitPair& split, double eta, const Vector& x) {
  const Vector jb = split.resolvent_B(eta, x);
  const Vector reflected = 2.0 * jb - x;
  return split.resolvent_A(eta, reflected) + x - jb;
}

Vector fb_step(const SplitPair& split, double eta, const Vector& x) {
  return split.resolvent_A(eta, x - eta * split.B_forward(x));
}

Vector bnn_field(const VIProblem& problem, const Vector& x) {
  const Vector f = problem.F(x);
  double average = 0.0;
  for (Eigen::Index k = 0; k < x.size(); ++k) average += x[k] * f[k];
  Vector excess(x.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    excess[i] = std::max(0.0, average - f[i]);
    total += excess[i];
  }
  Vector field(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) field[i] = excess[i] - x[i] * total;
  return field;
}

Vector fbf_field(const VIProblem& problem, double eta, const Vector& x) {
  const Vector fx = problem.F(x);
  const Vector y = problem.set.project(x - eta * fx);
  return y + eta * (fx - problem.F(y)) - x;
}

}  // namespace tmd::reference
