#ifndef ORBITRACK_PATTERN_HPP
#define ORBITRACK_PATTERN_HPP

#include <complex>
#include <memory>
#include <optional>
#include <vector>

#include "orbitrack/field.hpp"
#include "orbitrack/lie.hpp"
#include "orbitrack/model.hpp"

// Computing the symmetry solution (u*, X) by Newton continuation in the
// comoving frame, the center/stable splitting around it, and the decay
// constants of the stable part.

namespace orbitrack {

/// Envelope constants of the linearized decay: ||S*(t) P_s|| <= M e^{-at},
/// with the stationary-frame constants derived from them.
struct StabilityConstants {
  double M = 1.0;   // comoving transient bound, >= 1
  double a = 0.0;   // decay rate, > 0
  double M1 = 1.0;  // group-action bound (isometric actions: 1)
  double M2 = 1.0;  // evolution-family bound
  double M3 = 1.0;  // M1^2 * M
  double fit_t0 = 1.0;
  double fit_t1 = 0.0;
};

struct Pattern {
  std::shared_ptr<Model> model;
  Field ustar;
  AlgebraElement x = AlgebraElement::zero(GroupKind::Translation1D);
  double residual_norm = 0.0;

  // filled by spectral_decomposition
  bool decomposed = false;
  std::vector<Field> center_tangents;    // pi(X_i) u*
  std::vector<Field> adjoint_functions;  // phi^i with <phi^i, pi(X_j)u*> = delta_ij
  std::vector<std::complex<double>> center_eigenvalues;
  double spectral_gap = 0.0;  // b = -max Re(non-center spectrum near the axis)
  double max_principal_angle = 0.0;  // eigenspace vs group tangents
  std::complex<double> leading_stable_eigenvalue{0.0, 0.0};
  Field leading_stable_mode;  // real part of the rightmost non-center pair

  // filled by estimate_decay
  std::optional<StabilityConstants> constants;

  LinearOperator comoving() const { return comoving_operator(*model, x, ustar); }
  int group_dim() const { return algebra_dim(x.kind); }
};

struct ProfileOptions {
  double tol = 1e-8;              // on the L2 residual norm
  int max_iter = 40;
  double boundary_decay_tol = 1e-8;  // sup |u| on the outermost cell ring
  bool fix_x = false;             // keep X as given (no speed unknowns)
  bool check_boundary = true;
  // grids whose unknown count exceeds this use the matrix-free Newton path
  int dense_limit = 4500;
  int gmres_restart = 250;
  int gmres_max_iter = 2500;
  double gmres_tol = 5e-3;        // inexact Newton forcing term
};

/// Newton continuation for the comoving profile: R(u, X) = Au - pi(X)u + F(u)
/// with one phase condition per group dimension pinning the orbit. Speed
/// coordinates of X are unknowns unless fix_x is set.
Pattern solve_profile(std::shared_ptr<Model> model, const Field& guess,
                      const AlgebraElement& guess_x, const ProfileOptions& opts = {});

/// Travelling-front variant on a bounded interval: fourth-order finite
/// differences with the end values clamped to the guess's far-field states
/// and a single speed unknown. Used for non-localized 1D profiles.
Pattern solve_front_profile(std::shared_ptr<Model> model, const Field& guess, double guess_speed,
                            const ProfileOptions& opts = {});

struct DecompositionOptions {
  // grids whose unknown count exceeds this use shift-invert iterations
  // instead of the dense eigensolver
  int dense_limit = 2300;
  double eigen_tol = 1e-9;       // residual tolerance for shift-invert pairs
  double principal_angle_tol = 1e-3;
  int extra_pairs = 3;           // non-center pairs probed per target for the gap
  bool require_gap = true;       // instability error when gap <= 0
};

/// Computes the center eigen-triple of the discrete comoving operator,
/// verifies the right eigenspace against the group tangents, builds the
/// biorthogonal adjoint functions, and stores the spectral gap.
void spectral_decomposition(Pattern& p, const DecompositionOptions& opts = {});

/// P v: algebra coordinates (<phi^1,v>, ..., <phi^m,v>).
AlgebraElement project_center(const Pattern& p, const Field& v);

/// P*_s v = v - pi(P v) u*.
Field project_stable(const Pattern& p, const Field& v);

struct DecayOptions {
  int samples = 8;
  double dt = 1e-2;
  double fit_start = 1.0;
  std::uint64_t seed = 1234;
  bool zero_mean = false;  // subtract the spatial mean from the samples
};

/// Evolves stable-projected random fields under the comoving linear flow and
/// fits the upper envelope log||v(t)|| <= log M - a t on [fit_start, t_max].
StabilityConstants estimate_decay(Pattern& p, double t_max, int n_t,
                                  const DecayOptions& opts = {});

}  // namespace orbitrack

#endif  // ORBITRACK_PATTERN_HPP
