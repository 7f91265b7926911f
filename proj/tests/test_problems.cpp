#include <doctest.h>

#include "tmd/problems.hpp"

using namespace tmd;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("library problems evaluate as documented") {
  const auto skew = library_problem("skew_bilinear", {.dim = 2});
  CHECK((skew.F(vec({1, 0})) - vec({0, -1})).norm() == 0.0);
  CHECK(skew.known_solution->norm() == 0.0);

  const auto rps = library_problem("rps_game");
  CHECK(rps.F(Vector::Constant(3, 1.0 / 3.0)).norm() < 1e-16);
  CHECK(rps.set.kind() == SetKind::kSimplex);

  const auto vertex = library_problem("vertex_cost_simplex");
  CHECK((*vertex.known_solution - vec({1, 0})).norm() == 0.0);
  CHECK((vertex.F(vec({0.3, 0.7})) - vec({1, 2})).norm() == 0.0);

  const auto shift = library_problem("scalar_shift", {.shift = 3.0});
  CHECK(shift.F(vec({1.0}))[0] == -2.0);
  CHECK((*shift.known_solution)[0] == 3.0);
}

TEST_CASE("invalid problem parameters") {
  CHECK_THROWS_AS(library_problem("no_such_problem"), ConfigError);
  CHECK_THROWS_AS(library_problem("skew_bilinear", {.dim = 1}), ConfigError);
  CHECK_THROWS_AS(library_problem("rps_game", {.dim = 4}), ConfigError);
  CHECK_THROWS_AS(library_problem("vertex_cost_simplex", {.costs = vec({1, 1})}), ConfigError);
  CHECK_THROWS_AS(library_problem("constrained_quadratic", {.box_lower = 1.0, .box_upper = 0.0}),
                  ConfigError);
}

TEST_CASE("natural residual") {
  const auto skew = library_problem("skew_bilinear", {.dim = 2});
  CHECK(natural_residual(skew, vec({0, 0})) == 0.0);
  CHECK(natural_residual(skew, vec({1, 0})) == doctest::Approx(1.0));

  const auto vertex = library_problem("vertex_cost_simplex");
  CHECK(natural_residual(vertex, vec({1, 0})) == 0.0);
  CHECK(natural_residual(vertex, vec({0.5, 0.5})) > 0.1);
}

TEST_CASE("known solutions have zero natural residual") {
  for (const auto& name : library_problem_names()) {
    CAPTURE(name);
    const auto p = library_problem(name);
    REQUIRE(p.known_solution.has_value());
    CHECK(p.set.contains(*p.known_solution));
    CHECK(natural_residual(p, *p.known_solution) < 1e-12);
  }
  const auto big = library_problem("linear_monotone", {.dim = 6, .seed = 3});
  CHECK(natural_residual(big, *big.known_solution) < 1e-10);
  const auto quad = library_problem("constrained_quadratic", {.dim = 5});
  CHECK(quad.set.contains_interior(*quad.known_solution));
}

TEST_CASE("sampled monotonicity") {
  const auto skew = library_problem("skew_bilinear", {.dim = 4});
  const auto skew_report = check_monotonicity(skew, 300, 1);
  CHECK(std::abs(skew_report.min_inner) <= 1e-9);
  CHECK(skew_report.verdict == MonotonicityVerdict::kConsistentMonotone);

  const auto shift = library_problem("scalar_shift");
  const auto shift_report = check_monotonicity(shift, 300, 1);
  CHECK(shift_report.min_ratio >= 1.0 - 1e-9);
  CHECK(shift_report.verdict == MonotonicityVerdict::kConsistentStronglyMonotone);

  const VectorMap negate = [](const Vector& x) -> Vector { return -x; };
  const auto box = FeasibleSet::box(vec({-1}), vec({1}));
  const auto refuted = sample_monotonicity(negate, box, 100, 1);
  CHECK(refuted.verdict == MonotonicityVerdict::kRefuted);
  REQUIRE(refuted.witness.has_value());
  const auto& [a, b] = *refuted.witness;
  CHECK((negate(a) - negate(b)).dot(a - b) < 0.0);

  for (const auto& name : library_problem_names()) {
    CAPTURE(name);
    CHECK(check_monotonicity(library_problem(name), 200, 9).verdict !=
          MonotonicityVerdict::kRefuted);
  }
}

TEST_CASE("lipschitz estimate") {
  const auto skew = library_problem("skew_bilinear", {.dim = 2});
  CHECK(lipschitz_estimate(skew) == doctest::Approx(1.0).epsilon(1e-9));
  const auto shift = library_problem("scalar_shift");
  CHECK(lipschitz_estimate(shift) == doctest::Approx(1.0).epsilon(1e-9));
  const auto vertex = library_problem("vertex_cost_simplex");
  CHECK(lipschitz_estimate(vertex) == doctest::Approx(0.0));
}
