#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/LU>

#include "tmd/dynamics.hpp"
#include "tmd/targets.hpp"

using namespace tmd;

namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

TargetSpec resolvent_spec(VectorMap S, VectorMap Phi, const FeasibleSet& set) {
  TargetSpec spec;
  spec.preset = "custom";
  spec.S = std::move(S);
  spec.Phi = std::move(Phi);
  spec.set = set;
  spec.target = ResolventSolveTarget{};
  return spec;
}

const VectorMap kIdentity = [](const Vector& x) -> Vector { return x; };

}  // namespace

TEST_CASE("generic resolvent solve") {
  const auto plane = FeasibleSet::whole_space(2);
  const VectorMap zero = [](const Vector& x) -> Vector { return Vector::Zero(x.size()); };
  const auto identity = resolvent_spec(kIdentity, zero, plane);
  CHECK((resolve_target(identity, vec({2, 2})) - vec({2, 2})).norm() <= 1e-10);

  const auto shift = library_problem("scalar_shift");
  const VectorMap half_f = [F = shift.F](const Vector& x) -> Vector { return 0.5 * F(x); };
  const auto half = resolvent_spec(kIdentity, half_f, shift.set);
  CHECK(resolve_target(half, vec({0.0}))[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("resolvent solve reports nonconvergence") {
  const auto line = FeasibleSet::whole_space(1);
  // S + Phi = 0 has no resolvent; every step backs off and then runs out.
  const VectorMap minus = [](const Vector& x) -> Vector { return -x; };
  auto spec = resolvent_spec(kIdentity, minus, line);
  std::get<ResolventSolveTarget>(spec.target).max_iterations = 50;
  CHECK_THROWS_AS(resolve_target(spec, vec({1.0})), NonconvergenceError);
  try {
    resolve_target(spec, vec({1.0}));
  } catch (const NonconvergenceError& err) {
    CHECK(err.last_residual() >= 0.0);
  }
}

TEST_CASE("ppa preset") {
  const auto shift = library_problem("scalar_shift");
  const auto euclid = euclidean_geometry(shift.set);
  const auto spec = preset_ppa(euclid, shift, 1.0);
  CHECK(spec.alpha == 1.0);
  CHECK(spec.beta == 0.0);
  CHECK(resolve_target(spec, vec({0.0}))[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(resolve_target(spec, vec({2.0}))[0] - 2.0) <= 1e-10);

  SUBCASE("entropic prox on constant costs is multiplicative") {
    const auto vertex = library_problem("vertex_cost_simplex");
    const auto entropy = entropy_geometry(2);
    const auto eprox = preset_ppa(entropy, vertex, 1.0);
    const Vector y = resolve_target(eprox, vec({0.5, 0.5}));
    CHECK(y[0] == doctest::Approx(0.731058578630005).epsilon(1e-8));
    CHECK(y[1] == doctest::Approx(0.268941421369995).epsilon(1e-8));
  }

  SUBCASE("linear resolvent agrees with a direct solve") {
    const auto lin = library_problem("linear_monotone", {.dim = 4});
    const auto g = euclidean_geometry(lin.set);
    const auto p = preset_ppa(g, lin, 0.5);
    const Vector x = vec({1, -1, 0.5, 2});
    const Matrix lhs = Matrix::Identity(4, 4) + 0.5 * *lin.linear_part;
    const Vector direct = lhs.partialPivLu().solve(x - 0.5 * *lin.offset);
    CHECK((resolve_target(p, x) - direct).norm() <= 1e-8);
  }

  CHECK_THROWS_AS(preset_ppa(euclid, shift, 0.0), ConfigError);
  CHECK_THROWS_AS(preset_ppa(euclid, shift, -1.0), ConfigError);
  CHECK_THROWS_AS(preset_ppa(entropy_geometry(3), shift, 1.0), ConfigError);
}

TEST_CASE("property: resolvent output satisfies the variational inequality") {
  std::mt19937_64 rng(17);
  const auto quad = library_problem("constrained_quadratic", {.dim = 3});
  const auto rps = library_problem("rps_game");
  struct Case {
    VIProblem problem;
    MirrorGeometry geometry;
  };
  const std::vector<Case> cases = {{quad, euclidean_geometry(quad.set)},
                                   {rps, entropy_geometry(3)},
                                   {rps, euclidean_geometry(rps.set)}};
  for (const auto& c : cases) {
    CAPTURE(c.geometry.name());
    const auto spec = preset_ppa(c.geometry, c.problem, 0.5);
    const double tol = std::get<ResolventSolveTarget>(spec.target).tol;
    for (int k = 0; k < 10; ++k) {
      const Vector x = c.problem.set.sample(rng);
      const Vector y = resolve_target(spec, x);
      const Vector g = spec.S(y) + spec.Phi(y) - spec.S(x);
      for (int j = 0; j < 100; ++j) {
        const Vector u = c.problem.set.sample(rng);
        CHECK(g.dot(u - y) >= -10.0 * tol);
      }
    }
  }
}

TEST_CASE("eg preset") {
  const auto skew = library_problem("skew_bilinear", {.dim = 2});
  const auto g = euclidean_geometry(skew.set);
  const auto spec = preset_eg(g, skew, 0.1, 0.1);
  CHECK(spec.alpha == 1.0);
  const Vector x = vec({1, 0});
  const Vector t = resolve_target(spec, x);
  CHECK((t - vec({1, 0.1})).norm() < 1e-15);
  CHECK((spec.S(t) - spec.S(x) - vec({-0.01, 0.1})).norm() < 1e-15);
  CHECK((resolve_target(spec, vec({0, 0}))).norm() == 0.0);
  CHECK(spec.sigma == doctest::Approx(1.0).epsilon(1e-9));

  const auto plus = preset_eg(g, skew, 0.2, 0.1);
  CHECK(plus.alpha == doctest::Approx(0.5));
  CHECK_THROWS_AS(preset_eg(g, skew, 0.1, 0.0), ConfigError);
  // grad h - eta F loses strong monotonicity once eta is large relative to the modulus.
  const auto steep = library_problem("linear_monotone", {.dim = 3});
  CHECK_THROWS_AS(preset_eg(euclidean_geometry(steep.set), steep, 1e3, 1e3), ConfigError);
}

TEST_CASE("douglas-rachford preset") {
  const auto box = FeasibleSet::box(vec({0}), vec({1}));
  const auto split = box_affine_split(box, vec({2}));
  const auto spec = preset_dr(split, FeasibleSet::whole_space(1), 1.0);
  CHECK(resolve_target(spec, vec({0}))[0] == doctest::Approx(0.0));
  CHECK(resolve_target(spec, vec({2}))[0] == doctest::Approx(1.0));
  CHECK(resolve_target(spec, vec({1}))[0] == doctest::Approx(0.5));
  CHECK(dr_shadow(split, 1.0, vec({0}))[0] == doctest::Approx(1.0));
  CHECK(natural_residual(*split.problem, dr_shadow(split, 1.0, vec({0}))) < 1e-15);
  // Implicit Phi(T(x)) = x - T(x).
  CHECK(phi_at_target(spec, vec({2}), vec({1}))[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(preset_dr(split, box, 1.0), ConfigError);
}

TEST_CASE("forward-backward preset") {
  const auto box = FeasibleSet::box(vec({0}), vec({1}));
  const auto split = box_affine_split(box, vec({2}));
  const auto spec = preset_fb(split, FeasibleSet::whole_space(1), 0.5);
  CHECK(resolve_target(spec, vec({0}))[0] == doctest::Approx(1.0));
  CHECK(resolve_target(spec, vec({1}))[0] == doctest::Approx(1.0));
  CHECK(resolve_target(spec, vec({-2}))[0] == doctest::Approx(0.0));
  CHECK_THROWS_AS(preset_fb(split, FeasibleSet::whole_space(1), 4.0), ConfigError);
}

TEST_CASE("excess payoff and the aitchison sum") {
  const auto rps = library_problem("rps_game");
  const auto uniform = excess_payoff(rps, Vector::Constant(3, 1.0 / 3.0));
  CHECK(uniform.excess.norm() == 0.0);

  const Vector x = vec({0.5, 0.25, 0.25});
  const auto payoff = excess_payoff(rps, x);
  CHECK((payoff.excess - vec({0, 0.25, 0})).norm() < 1e-16);
  CHECK((payoff.normalized - vec({0, 1, 0})).norm() < 1e-16);

  auto shifted = rps;
  shifted.F = [F = rps.F](const Vector& y) -> Vector { return F(y).array() + 5.0; };
  CHECK((excess_payoff(shifted, x).excess - payoff.excess).norm() < 1e-15);
  CHECK_THROWS_AS(excess_payoff(rps, vec({1, 0, 0})), DomainError);

  CHECK((aitchison_add(vec({0.25, 0.75}), vec({3, 1})) - vec({0.5, 0.5})).norm() < 1e-16);
  CHECK((aitchison_add(vec({1, 3}), vec({1, 1})) - vec({0.25, 0.75})).norm() < 1e-16);
  const Vector u = Vector::Constant(4, 0.25);
  CHECK((aitchison_add(u, u) - u).norm() < 1e-16);
  CHECK_THROWS_AS(aitchison_add(vec({0.5, 0.5}), vec({1, 0})), DomainError);
  CHECK_THROWS_AS(aitchison_add(vec({0.5, 0.5}), vec({1, 1, 1})), DomainError);
}

TEST_CASE("bnn preset") {
  const auto rps = library_problem("rps_game");
  const auto spec = preset_bnn(rps, 1.0);
  CHECK(spec.alpha == 1.0);
  const Vector u = Vector::Constant(3, 1.0 / 3.0);
  CHECK((resolve_target(spec, u) - u).norm() < 1e-15);

  const Vector x = vec({0.5, 0.25, 0.25});
  const Vector t = resolve_target(spec, x);
  CHECK((t - vec({0.349755409054219, 0.475366886418672, 0.174877704527109})).norm() < 1e-12);
  CHECK((t - bnn_target_dual_shift(rps, 1.0, x)).norm() < 1e-15);

  // The correction is the normalized excess payoff up to a multiple of the ones vector.
  const Vector correction = spec.alpha * (spec.S(t) - spec.S(x));
  const Vector normalized = excess_payoff(rps, x).normalized;
  const Vector gap = correction - normalized;
  CHECK((gap.array() - gap.mean()).matrix().norm() < 1e-14);

  SUBCASE("aitchison and dual-shift forms agree on interior samples") {
    std::mt19937_64 rng(3);
    for (double eta : {0.01, 0.5, 1.0}) {
      const auto s = preset_bnn(rps, eta);
      for (int k = 0; k < 1000; ++k) {
        const Vector y = rps.set.sample(rng);
        if (y.minCoeff() < 1e-3) continue;
        CHECK((resolve_target(s, y) - bnn_target_dual_shift(rps, eta, y)).norm() <= 1e-10);
      }
    }
  }
  CHECK_THROWS_AS(preset_bnn(library_problem("scalar_shift"), 1.0), ConfigError);
}

TEST_CASE("fbf preset") {
  const auto skew = library_problem("skew_bilinear", {.dim = 2});
  const auto spec = preset_fbf(skew, 0.1);
  const auto g = euclidean_geometry(skew.set);
  CHECK((primal_velocity(g, spec, vec({1, 0})) - vec({-0.01, 0.1})).norm() < 1e-15);
  CHECK(primal_velocity(g, spec, vec({0, 0})).norm() == 0.0);

  const auto quad = library_problem("constrained_quadratic", {.dim = 4});
  const auto qspec = preset_fbf(quad, 0.2);
  CHECK((resolve_target(qspec, *quad.known_solution) - *quad.known_solution).norm() < 1e-15);
}

TEST_CASE("fixed points sit at known solutions") {
  for (const auto& name : library_problem_names()) {
    CAPTURE(name);
    const auto p = library_problem(name);
    const Vector& xs = *p.known_solution;
    const auto g = euclidean_geometry(p.set);
    CHECK((resolve_target(preset_ppa(g, p, 0.5), xs) - xs).norm() <= 1e-9);
    CHECK((resolve_target(preset_eg(g, p, 0.1, 0.1), xs) - xs).norm() <= 1e-12);
    CHECK((resolve_target(preset_fbf(p, 0.1), xs) - xs).norm() <= 1e-12);
  }
  const auto rps = library_problem("rps_game");
  const Vector u = *rps.known_solution;
  CHECK((resolve_target(preset_eg(entropy_geometry(3), rps, 0.1, 0.1), u) - u).norm() <= 1e-12);
  CHECK((resolve_target(preset_ppa(entropy_geometry(3), rps, 0.5), u) - u).norm() <= 1e-9);
}

TEST_CASE("calibrated dmd preset") {
  const auto shift = library_problem("scalar_shift");
  const auto g = euclidean_geometry(shift.set);
  const auto one = preset_calibrated_dmd(g, shift, 1.0, 1.0, DmdCase::kDualGradient);
  CHECK(one.dmd_case == DmdCase::kDualGradient);
  CHECK(one.beta == 0.0);
  const auto two = preset_calibrated_dmd(g, shift, 0.5, 2.0, DmdCase::kExtragradient);
  CHECK(two.alpha == 2.0);
  CHECK(two.beta == 2.0);
  CHECK_THROWS_AS(preset_calibrated_dmd(g, shift, 1.0, 1.0, DmdCase::kNone), ConfigError);
}
