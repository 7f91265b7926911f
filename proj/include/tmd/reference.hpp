#pragma once

#include "tmd/problems.hpp"
#include "tmd/targets.hpp"
#include "tmd/types.hpp"

// Textbook forms of the classical methods, written directly from their own
// update rules. They never touch TargetSpec or the TMD steppers and serve as
// the independent side of the equivalence checks.
namespace tmd::reference {

/// Proximal point step for an affine F(x) = M x + q on the whole space:
/// solves (I + eta M) y = x - eta q.
Vector ppa_affine_step(const VIProblem& problem, double eta, const Vector& x);

/// Entropic proximal point step for a constant F = c on the simplex:
/// y proportional to x exp(-eta c).
Vector ppa_entropic_constant_step(const VIProblem& problem, double eta, const Vector& x);

/// Projected extragradient: w = P(x - eta1 F(x)), x+ = P(x - eta2 F(w)).
Vector eg_projected_step(const VIProblem& problem, double eta1, double eta2, const Vector& x);

/// Mirror-prox with entropy: w ~ x exp(-eta1 F(x)), x+ ~ x exp(-eta2 F(w)).
Vector eg_entropic_step(const VIProblem& problem, double eta1, double eta2, const Vector& x);

/// Douglas-Rachford governing step J_A(2 J_B(x) - x) + x - J_B(x).
Vector dr_step(const SplitPair& split, double eta, const Vector& x);

/// Forward-backward step J_A(x - eta B(x)).
Vector fb_step(const SplitPair& split, double eta, const Vector& x);

/// Brown-von Neumann-Nash vector field on the simplex for cost F.
Vector bnn_field(const VIProblem& problem, const Vector& x);

/// Forward-backward-forward vector field y + eta (F(x) - F(y)) - x, y = P(x - eta F(x)).
Vector fbf_field(const VIProblem& problem, double eta, const Vector& x);

}  // namespace tmd::reference
