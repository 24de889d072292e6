#include "orbitrack/phase.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "orbitrack/errors.hpp"

namespace orbitrack {

namespace {

GroupElement group_exp_scaled(const AlgebraElement& x, double t) {
  return exp_group(AlgebraElement::from_coords(x.kind, t * x.coords));
}

// exp(e^{tL} P w) and the coordinates it used
std::pair<GroupElement, Eigen::VectorXd> phase_correction(const Pattern& p, const Field& w,
                                                          double t) {
  AdjointMap l = adjoint_map(p.x);
  Eigen::VectorXd coords = exp_adjoint(l, t).matrix * project_center(p, w).coords;
  return {exp_group(AlgebraElement::from_coords(p.x.kind, coords)), coords};
}

}  // namespace

PhaseEstimate predicted_phase(const Pattern& p, const Field& v0, double t) {
  if (!p.decomposed) throw StructuralError("predicted_phase: decomposition not computed");
  if (!(t >= 0.0)) throw StructuralError("predicted_phase: t must be nonnegative");
  auto [corr, coords] = phase_correction(p, v0, t);
  PhaseEstimate est;
  est.gamma = compose(group_exp_scaled(p.x, t), corr);
  est.center_coords = coords;
  est.t = t;
  est.method = PhaseMethod::Predicted;
  return est;
}

std::vector<PhaseEstimate> phase_recursion(const Pattern& p,
                                           const std::vector<std::pair<double, Field>>& snapshots,
                                           double interval, double trust_radius_rel) {
  if (!p.decomposed) throw StructuralError("phase_recursion: decomposition not computed");
  if (snapshots.empty()) throw StructuralError("phase_recursion: no snapshots");
  if (!(interval > 0.0)) throw StructuralError("phase_recursion: interval must be positive");
  for (size_t n = 0; n < snapshots.size(); ++n)
    if (std::abs(snapshots[n].first - static_cast<double>(n) * interval) >
        1e-9 * (1.0 + interval))
      throw StructuralError("phase_recursion: snapshots must be spaced by the interval from 0");

  const double ustar_norm = norm_l2(p.ustar);
  GroupElement step_x = group_exp_scaled(p.x, interval);

  std::vector<PhaseEstimate> out;
  GroupElement gamma = GroupElement::identity(p.x.kind);
  {
    PhaseEstimate e0;
    e0.gamma = gamma;
    e0.center_coords = Eigen::VectorXd::Zero(p.group_dim());
    e0.t = 0.0;
    e0.method = PhaseMethod::Recursion;
    out.push_back(e0);
  }

  for (size_t n = 0; n + 1 < snapshots.size(); ++n) {
    Field pulled = act(inverse(gamma), snapshots[n].second);
    Field w = pulled - p.ustar;
    double dev = norm_l2(w);
    if (dev > trust_radius_rel * ustar_norm)
      throw TrackingLostError("phase_recursion: deviation " + std::to_string(dev) +
                              " exceeds the trust radius at t = " +
                              std::to_string(snapshots[n].first));
    auto [corr, coords] = phase_correction(p, w, interval);
    gamma = compose(compose(gamma, step_x), corr);

    PhaseEstimate e;
    e.gamma = gamma;
    e.center_coords = coords;
    e.t = snapshots[n + 1].first;
    e.method = PhaseMethod::Recursion;
    out.push_back(e);
  }
  return out;
}

PhaseEstimate nearest_phase(const Pattern& p, const Field& u, const GroupElement& seed,
                            const NearestPhaseOptions& opts) {
  if (!p.decomposed) throw StructuralError("nearest_phase: decomposition not computed");
  const int m = p.group_dim();
  auto basis_coords = [&](int i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e[i] = 1.0;
    return e;
  };

  GroupElement gamma = seed;
  Field moved = act(gamma, p.ustar);
  double res = norm_l2(u - moved);
  bool trusted = true;

  for (int it = 0; it < opts.max_iter; ++it) {
    // Jacobian columns d/d delta_i act(gamma exp(delta_i X_i), u*)
    Eigen::MatrixXd gram(m, m);
    Eigen::VectorXd rhs(m);
    std::vector<Field> cols;
    cols.reserve(m);
    for (int i = 0; i < m; ++i) cols.push_back(act(gamma, p.center_tangents[i]));
    Field r = u - moved;
    for (int i = 0; i < m; ++i) {
      rhs[i] = inner(cols[i], r);
      for (int j = 0; j <= i; ++j) {
        gram(i, j) = inner(cols[i], cols[j]);
        gram(j, i) = gram(i, j);
      }
    }
    Eigen::VectorXd delta = gram.ldlt().solve(rhs);
    if (!delta.allFinite()) break;
    if (delta.norm() <= opts.step_tol) break;  // stationary point

    double step = 1.0;
    bool accepted = false;
    for (int half = 0; half < opts.max_halvings; ++half) {
      GroupElement cand =
          compose(gamma, exp_group(AlgebraElement::from_coords(p.x.kind, step * delta)));
      Field cand_moved = act(cand, p.ustar);
      double cand_res = norm_l2(u - cand_moved);
      if (cand_res < res) {
        gamma = cand;
        moved = cand_moved;
        res = cand_res;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      trusted = false;  // no decrease from the seed direction
      break;
    }
    if (delta.norm() * step <= opts.step_tol) break;
  }

  PhaseEstimate est;
  est.gamma = gamma;
  est.center_coords = Eigen::VectorXd::Zero(m);
  est.t = 0.0;
  est.method = PhaseMethod::Nearest;
  est.residual = res;
  est.trusted = trusted;
  return est;
}

}  // namespace orbitrack
