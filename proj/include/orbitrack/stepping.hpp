#ifndef ORBITRACK_STEPPING_HPP
#define ORBITRACK_STEPPING_HPP

#include <complex>
#include <optional>

#include "orbitrack/field.hpp"
#include "orbitrack/model.hpp"

// Semi-implicit (IMEX) time stepping shared by the simulator and the decay
// estimator: diffusion and the translational part of -pi(X) are treated
// implicitly through their Fourier symbols; reaction terms and the rotational
// part of -pi(X) are explicit (advective CFL: |omega| L dt / h <= 0.5).

namespace orbitrack {

class SemiImplicitStepper {
 public:
  /// dt and the implicit symbol are fixed at construction. `x` enables the
  /// comoving term -pi(X); pass std::nullopt for the stationary frame.
  SemiImplicitStepper(const Grid& grid, Eigen::VectorXd diffusion,
                      std::optional<AlgebraElement> x, double dt);

  double dt() const { return dt_; }

  /// (I - dt (A - pi_trans(X)))^{-1} rhs.
  Field solve_implicit(const Field& rhs) const;

  /// -pi_rot(X) v: the explicit rotational advection (zero for translations).
  Field rotation_term(const Field& v) const;

  /// One first-order linear step v <- impl_solve(v + dt (Jv + rot v)).
  Field euler(const LinearOperator& op, const Field& v) const;

  /// Second-order step: trapezoidal in the implicit symbol, Heun in the
  /// explicit part. Used where the linear propagation itself is under test.
  Field heun(const LinearOperator& op, const Field& v) const;

  bool cfl_ok() const { return cfl_ok_; }

 private:
  Field explicit_part(const LinearOperator& op, const Field& v) const;
  Field apply_multiplier(const Field& f, const Eigen::MatrixXcd& mult) const;

  Grid grid_;
  Eigen::VectorXd diffusion_;
  std::optional<AlgebraElement> x_;
  double dt_;
  double rot_speed_ = 0.0;
  bool cfl_ok_ = true;
  // cached per-component multipliers, stored as (modes x ncomp) tables
  Eigen::MatrixXcd solve_full_;  // 1/(1 - dt sym)
  Eigen::MatrixXcd solve_half_;  // 1/(1 - dt/2 sym)
  Eigen::MatrixXcd fwd_half_;    // (1 + dt/2 sym)
};

}  // namespace orbitrack

#endif  // ORBITRACK_STEPPING_HPP
