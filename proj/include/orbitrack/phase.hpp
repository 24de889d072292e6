#ifndef ORBITRACK_PHASE_HPP
#define ORBITRACK_PHASE_HPP

#include <utility>
#include <vector>

#include "orbitrack/pattern.hpp"

// Phase computation on the symmetry group: the forward-predicted phase
// gamma_t = exp(tX) exp(e^{tL} P v0), its long-time recursion over fixed
// intervals, and the local orbit-distance minimizer.

namespace orbitrack {

enum class PhaseMethod { Predicted, Recursion, Nearest };

struct PhaseEstimate {
  GroupElement gamma = GroupElement::identity(GroupKind::Translation1D);
  Eigen::VectorXd center_coords;  // e^{tL} P v0 in the algebra basis
  double t = 0.0;
  PhaseMethod method = PhaseMethod::Predicted;
  double residual = 0.0;  // orbit distance (nearest only)
  bool trusted = true;    // false when the minimizer could not improve
};

/// gamma_t(v0) = exp(tX) exp(e^{tL} P v0).
PhaseEstimate predicted_phase(const Pattern& p, const Field& v0, double t);

/// gamma((n+1)T) = gamma(nT) e^{TX} exp(e^{TL} P [Pi(gamma(nT)^{-1}) u(nT) - u*]),
/// starting from the identity. Snapshots must be equally spaced by T from 0.
/// Throws TrackingLostError when the pulled-back deviation leaves the trust
/// radius (relative to ||u*||).
std::vector<PhaseEstimate> phase_recursion(const Pattern& p,
                                           const std::vector<std::pair<double, Field>>& snapshots,
                                           double interval, double trust_radius_rel = 0.5);

struct NearestPhaseOptions {
  int max_iter = 50;
  double step_tol = 1e-10;
  int max_halvings = 20;
};

/// Local Gauss-Newton minimization of ||u - Pi(gamma) u*|| over the group,
/// seeded near the optimum; returns the seed with trusted=false when no
/// decrease is possible.
PhaseEstimate nearest_phase(const Pattern& p, const Field& u, const GroupElement& seed,
                            const NearestPhaseOptions& opts = {});

}  // namespace orbitrack

#endif  // ORBITRACK_PHASE_HPP
