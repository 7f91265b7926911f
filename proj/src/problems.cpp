#include "tmd/problems.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace tmd {

std::string to_string(MonotonicityTag tag) {
  switch (tag) {
    case MonotonicityTag::kStronglyMonotone:
      return "strongly_monotone";
    case MonotonicityTag::kMonotone:
      return "monotone";
    case MonotonicityTag::kPseudoMonotone:
      return "pseudo_monotone";
    case MonotonicityTag::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::string to_string(MonotonicityVerdict verdict) {
  switch (verdict) {
    case MonotonicityVerdict::kRefuted:
      return "refuted";
    case MonotonicityVerdict::kConsistentMonotone:
      return "consistent_with_monotone";
    case MonotonicityVerdict::kConsistentStronglyMonotone:
      return "consistent_with_strongly_monotone";
  }
  return "unknown";
}

const std::vector<std::string>& library_problem_names() {
  static const std::vector<std::string> names = {
      "skew_bilinear",         "linear_monotone",     "rps_game",
      "constrained_quadratic", "vertex_cost_simplex", "scalar_shift"};
  return names;
}

namespace {

VIProblem affine_problem(std::string name, FeasibleSet set, Matrix m, Vector q) {
  VIProblem p{std::move(name), std::move(set), {}, {}, MonotonicityTag::kUnknown, 0.0, {}, m, q};
  p.F = [m = std::move(m), q = std::move(q)](const Vector& x) -> Vector { return m * x + q; };
  return p;
}

int dim_or(const ProblemParams& params, int fallback) {
  const int dim = params.dim.value_or(fallback);
  if (dim < 1) throw ConfigError("problem dimension must be positive");
  return dim;
}

VIProblem make_skew_bilinear(const ProblemParams& params) {
  const int n = dim_or(params, 2);
  if (n < 2) throw ConfigError("skew_bilinear: dim must be at least 2");
  Matrix m = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    m(i, i + 1) = 1.0;
    m(i + 1, i) = -1.0;
  }
  auto p = affine_problem("skew_bilinear", FeasibleSet::whole_space(n), m, Vector::Zero(n));
  p.monotonicity = MonotonicityTag::kMonotone;
  p.known_solution = Vector::Zero(n);
  return p;
}

VIProblem make_linear_monotone(const ProblemParams& params) {
  const int n = dim_or(params, 3);
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, n);
  Matrix k(n, n);
  Vector q(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) k(i, j) = normal(rng);
  for (int i = 0; i < n; ++i) q[i] = normal(rng);
  Matrix m = g * g.transpose() / n + 0.5 * (k - k.transpose());
  Vector solution = m.fullPivLu().solve(-q);
  auto p = affine_problem("linear_monotone", FeasibleSet::whole_space(n), m, q);
  p.monotonicity = MonotonicityTag::kMonotone;
  p.known_solution = solution;
  return p;
}

VIProblem make_rps_game() {
  Matrix a(3, 3);
  a << 0, 1, -1,  //
      -1, 0, 1,   //
      1, -1, 0;
  auto p = affine_problem("rps_game", FeasibleSet::simplex(3), a, Vector::Zero(3));
  p.monotonicity = MonotonicityTag::kMonotone;
  p.known_solution = Vector::Constant(3, 1.0 / 3.0);
  return p;
}

VIProblem make_constrained_quadratic(const ProblemParams& params) {
  const int n = dim_or(params, 2);
  const double lo = params.box_lower.value_or(-1.0);
  const double hi = params.box_upper.value_or(1.0);
  if (!(lo < hi)) throw ConfigError("constrained_quadratic: box_lower must be below box_upper");
  // Gershgorin: eigenvalues of Q lie in [1, 3].
  Matrix q_mat = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    q_mat(i, i) = 2.0;
    if (i + 1 < n) q_mat(i, i + 1) = q_mat(i + 1, i) = 0.5;
  }
  Vector solution(n);
  for (int i = 0; i < n; ++i) solution[i] = lo + (hi - lo) * (i % 2 == 0 ? 0.75 : 0.375);
  Vector q = -q_mat * solution;
  auto p = affine_problem("constrained_quadratic",
                          FeasibleSet::box(Vector::Constant(n, lo), Vector::Constant(n, hi)),
                          q_mat, q);
  p.monotonicity = MonotonicityTag::kStronglyMonotone;
  p.strong_monotonicity = 1.0;
  p.known_solution = solution;
  return p;
}

VIProblem make_vertex_cost_simplex(const ProblemParams& params) {
  Vector c = params.costs.value_or(Vector{{1.0, 2.0}});
  const auto n = c.size();
  if (n < 2) throw ConfigError("vertex_cost_simplex: need at least two costs");
  if (params.dim && *params.dim != n)
    throw ConfigError("vertex_cost_simplex: dim does not match the cost vector");
  std::vector<double> sorted(c.data(), c.data() + n);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("vertex_cost_simplex: costs must be distinct");
  Eigen::Index best = 0;
  c.minCoeff(&best);
  Vector solution = Vector::Zero(n);
  solution[best] = 1.0;
  auto p = affine_problem("vertex_cost_simplex", FeasibleSet::simplex(static_cast<int>(n)),
                          Matrix::Zero(n, n), c);
  p.monotonicity = MonotonicityTag::kMonotone;
  p.known_solution = solution;
  return p;
}

VIProblem make_scalar_shift(const ProblemParams& params) {
  if (params.dim && *params.dim != 1) throw ConfigError("scalar_shift: dim must be 1");
  const double a = params.shift.value_or(2.0);
  auto p = affine_problem("scalar_shift", FeasibleSet::whole_space(1), Matrix::Identity(1, 1),
                          Vector::Constant(1, -a));
  p.monotonicity = MonotonicityTag::kStronglyMonotone;
  p.strong_monotonicity = 1.0;
  p.known_solution = Vector::Constant(1, a);
  return p;
}

}  // namespace

VIProblem library_problem(const std::string& name, const ProblemParams& params) {
  if (name == "skew_bilinear") return make_skew_bilinear(params);
  if (name == "linear_monotone") return make_linear_monotone(params);
  if (name == "rps_game") {
    if (params.dim && *params.dim != 3) throw ConfigError("rps_game: dim must be 3");
    return make_rps_game();
  }
  if (name == "constrained_quadratic") return make_constrained_quadratic(params);
  if (name == "vertex_cost_simplex") return make_vertex_cost_simplex(params);
  if (name == "scalar_shift") return make_scalar_shift(params);
  throw ConfigError("unknown problem '" + name + "'");
}

double natural_residual(const VIProblem& problem, const Vector& x) {
  return (x - problem.set.project(x - problem.F(x))).norm();
}

MonotonicityReport sample_monotonicity(const VectorMap& map, const FeasibleSet& set,
                                       int n_samples, std::uint64_t rng_seed,
                                       double sample_scale) {
  if (n_samples < 2) throw ConfigError("monotonicity check needs at least 2 samples");
  std::mt19937_64 rng(rng_seed);
  MonotonicityReport report;
  report.min_inner = std::numeric_limits<double>::infinity();
  report.min_ratio = std::numeric_limits<double>::infinity();
  Vector worst_x, worst_y;
  for (int k = 0; k < n_samples; ++k) {
    const Vector x = set.sample(rng, sample_scale);
    const Vector y = set.sample(rng, sample_scale);
    const Vector d = x - y;
    const double dist2 = d.squaredNorm();
    if (dist2 == 0.0) continue;
    const double inner = (map(x) - map(y)).dot(d);
    ++report.pairs;
    if (inner < report.min_inner) {
      report.min_inner = inner;
      worst_x = x;
      worst_y = y;
    }
    report.min_ratio = std::min(report.min_ratio, inner / dist2);
  }
  if (report.pairs == 0) {
    report.min_inner = 0.0;
    report.min_ratio = 0.0;
    return report;
  }
  if (report.min_inner < kMonotonicityTolerance) {
    report.verdict = MonotonicityVerdict::kRefuted;
    report.witness = std::make_pair(worst_x, worst_y);
  } else if (report.min_ratio > -kMonotonicityTolerance) {
    report.verdict = MonotonicityVerdict::kConsistentStronglyMonotone;
  } else {
    report.verdict = MonotonicityVerdict::kConsistentMonotone;
  }
  return report;
}

MonotonicityReport check_monotonicity(const VIProblem& problem, int n_samples,
                                      std::uint64_t rng_seed) {
  return sample_monotonicity(problem.F, problem.set, n_samples, rng_seed);
}

double lipschitz_estimate(const VIProblem& problem, std::uint64_t rng_seed) {
  if (problem.lipschitz_hint) return *problem.lipschitz_hint;
  if (problem.linear_part) {
    const Matrix& m = *problem.linear_part;
    const Matrix gram = m.transpose() * m;
    Vector v(m.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + static_cast<double>(i);
    v.normalize();
    double rayleigh = 0.0;
    for (int it = 0; it < 50; ++it) {
      Vector w = gram * v;
      const double norm = w.norm();
      if (norm == 0.0) return 0.0;
      rayleigh = v.dot(w);
      v = w / norm;
    }
    rayleigh = std::max(rayleigh, v.dot(gram * v));
    return std::sqrt(std::max(rayleigh, 0.0));
  }
  std::mt19937_64 rng(rng_seed);
  double best = 0.0;
  for (int k = 0; k < 200; ++k) {
    const Vector x = problem.set.sample(rng);
    const Vector y = problem.set.sample(rng);
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    best = std::max(best, (problem.F(x) - problem.F(y)).norm() / dist);
  }
  return 2.0 * best;
}

}  // namespace tmd
