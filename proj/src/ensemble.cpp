#include "tmd/ensemble.hpp"

#include <cmath>

namespace tmd {

namespace {

void refresh(EnsembleMember& m) {
  m.z = m.z0 + m.displacement;
  m.x = m.geometry.grad_h_conj(m.z);
}

Vector mean_x(const std::vector<EnsembleMember>& members) {
  Vector sum = Vector::Zero(members.front().x.size());
  for (const auto& m : members) sum += m.x;
  return sum / static_cast<double>(members.size());
}

bool is_quadratic_whole_space(const MirrorGeometry& g) {
  if (g.family() == GeometryFamily::kWeightedQuadratic) return true;
  return g.family() == GeometryFamily::kEuclidean && g.domain_tag() == DomainTag::kWholeSpace;
}

double rigidity_error(const EnsembleState& e) {
  double worst = 0.0;
  for (std::size_t i = 1; i < e.members.size(); ++i) {
    const auto& a = e.members[i];
    const auto& b = e.members[0];
    worst = std::max(worst, ((a.z - b.z) - (a.z0 - b.z0)).cwiseAbs().maxCoeff());
  }
  return worst;
}

bool displacements_identical(const EnsembleState& e) {
  for (std::size_t i = 1; i < e.members.size(); ++i) {
    if (e.members[i].displacement != e.members[0].displacement) return false;
  }
  return true;
}

EnsembleComparison run(const std::vector<MemberSpec>& members, const TargetSpec& spec,
                       long steps, std::optional<double> dt, int stride, bool compare) {
  if (steps < 0) throw ConfigError("ensemble: step budget must be nonnegative");
  if (stride < 1) throw ConfigError("ensemble: stride must be at least 1");
  if (dt && !(*dt > 0.0)) throw ConfigError("ensemble: dt must be positive");
  EnsembleComparison out;
  EnsembleState ensemble = make_ensemble(members);
  std::optional<MirrorGeometry> synthesized;
  Vector z_single;
  Vector x_single;
  if (compare) {
    synthesized = synthesized_geometry(members);
    z_single = Vector::Zero(ensemble.x_en.size());
    x_single = synthesized->grad_h_conj(z_single);
  }
  const double h = dt.value_or(1.0);

  const auto record = [&]() {
    out.times.push_back(ensemble.time);
    out.x_ensemble.push_back(ensemble.x_en);
    if (compare) {
      const double dev = (ensemble.x_en - x_single).norm();
      out.x_single.push_back(x_single);
      out.deviations.push_back(dev);
      out.max_deviation = std::max(out.max_deviation, dev);
    }
    out.rigidity_exact = out.rigidity_exact && displacements_identical(ensemble);
    out.max_rigidity_error = std::max(out.max_rigidity_error, rigidity_error(ensemble));
  };

  record();
  for (long k = 0; k < steps; ++k) {
    ensemble = ensemble_step(ensemble, spec, dt);
    if (compare) {
      z_single += h * dual_drift(spec, x_single).increment;
      x_single = synthesized->grad_h_conj(z_single);
    }
    if (!ensemble.x_en.allFinite()) throw NonFiniteError("ensemble state became non-finite");
    if ((k + 1) % stride == 0 || k + 1 == steps) record();
  }
  out.final_ensemble = std::move(ensemble);
  return out;
}

}  // namespace

EnsembleState make_ensemble(const std::vector<MemberSpec>& members) {
  if (members.empty()) throw ConfigError("ensemble: at least one member is required");
  const int n = members.front().geometry.dim();
  EnsembleState state;
  for (const auto& spec : members) {
    if (spec.geometry.dim() != n || spec.z0.size() != n)
      throw ConfigError("ensemble: member dimension mismatch");
    EnsembleMember m{spec.geometry, spec.z0, Vector::Zero(n), {}, {}};
    refresh(m);
    state.members.push_back(std::move(m));
  }
  state.x_en = mean_x(state.members);
  return state;
}

EnsembleState ensemble_step(const EnsembleState& ensemble, const TargetSpec& spec,
                            std::optional<double> dt) {
  if (ensemble.members.empty()) throw ConfigError("ensemble: no members");
  Vector delta = dual_drift(spec, ensemble.x_en).increment;
  if (dt) delta *= *dt;
  EnsembleState next = ensemble;
  for (auto& m : next.members) {
    if (m.displacement.size() != delta.size())
      throw ConfigError("ensemble: member dimension mismatch");
    m.displacement += delta;
    refresh(m);
  }
  next.x_en = mean_x(next.members);
  next.step_index += 1;
  next.time += dt.value_or(1.0);
  return next;
}

MirrorGeometry synthesized_geometry(const std::vector<MemberSpec>& members) {
  if (members.empty()) throw ConfigError("synthesized_geometry: no members");
  const int n = members.front().geometry.dim();
  for (const auto& m : members) {
    if (m.geometry.dim() != n || m.z0.size() != n)
      throw ConfigError("synthesized_geometry: member dimension mismatch");
  }
  const double count = static_cast<double>(members.size());

  bool all_quadratic = true;
  bool all_entropy = true;
  for (const auto& m : members) {
    all_quadratic = all_quadratic && is_quadratic_whole_space(m.geometry);
    all_entropy = all_entropy && m.geometry.family() == GeometryFamily::kEntropy;
  }

  MirrorGeometry::Parts p;
  p.family = GeometryFamily::kSynthesized;
  p.dim = n;

  if (all_quadratic) {
    // h_k*(z) = 1/2 sum z_i^2 / w_i, so grad (h_en)*(z) = slope .* z + offset.
    Vector slope = Vector::Zero(n);
    Vector offset = Vector::Zero(n);
    double constant = 0.0;
    for (const auto& m : members) {
      const Vector inv = m.geometry.weights()->cwiseInverse();
      slope += inv;
      offset += m.z0.cwiseProduct(inv);
      constant += 0.5 * m.z0.cwiseProduct(m.z0).cwiseProduct(inv).sum();
    }
    slope /= count;
    offset /= count;
    constant /= count;
    p.name = "synthesized_quadratic";
    p.domain_tag = DomainTag::kWholeSpace;
    p.domain = FeasibleSet::whole_space(n);
    p.strong_convexity_modulus = 1.0 / slope.maxCoeff();
    p.grad_h_conj = [slope, offset](const Vector& z) -> Vector {
      return slope.cwiseProduct(z) + offset;
    };
    p.grad_h = [slope, offset](const Vector& x) -> Vector {
      return (x - offset).cwiseQuotient(slope);
    };
    p.eval_h = [slope, offset, constant](const Vector& x) {
      return 0.5 * ((x - offset).array().square() / slope.array()).sum() - constant;
    };
    return MirrorGeometry(std::move(p));
  }

  if (all_entropy) {
    std::vector<Vector> shifts;
    shifts.reserve(members.size());
    for (const auto& m : members) shifts.push_back(m.z0);
    p.name = "synthesized_entropy";
    p.domain_tag = DomainTag::kSimplex;
    p.domain = FeasibleSet::simplex(n);
    // Infimal convolution of N copies of (1/N) h(N x): moduli N combine to 1.
    p.strong_convexity_modulus = 1.0;
    p.grad_h_conj = [shifts, count](const Vector& z) -> Vector {
      Vector sum = Vector::Zero(z.size());
      for (const auto& s : shifts) sum += softmax(z + s);
      return sum / count;
    };
    return MirrorGeometry(std::move(p));
  }

  throw UnsupportedError(
      "synthesized_geometry: closed form requires all-quadratic whole-space members or "
      "all-entropy members");
}

EnsembleComparison verify_theorem2(const std::vector<MemberSpec>& members,
                                   const TargetSpec& spec, long steps, std::optional<double> dt,
                                   int stride) {
  return run(members, spec, steps, dt, stride, true);
}

EnsembleComparison run_ensemble(const std::vector<MemberSpec>& members, const TargetSpec& spec,
                                long steps, std::optional<double> dt, int stride) {
  return run(members, spec, steps, dt, stride, false);
}

}  // namespace tmd
