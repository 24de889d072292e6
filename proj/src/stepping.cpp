#include "orbitrack/stepping.hpp"

#include <cmath>

#include "orbitrack/errors.hpp"
#include "orbitrack/fft.hpp"

namespace orbitrack {

using Cplx = std::complex<double>;

SemiImplicitStepper::SemiImplicitStepper(const Grid& grid, Eigen::VectorXd diffusion,
                                         std::optional<AlgebraElement> x, double dt)
    : grid_(grid), diffusion_(std::move(diffusion)), x_(std::move(x)), dt_(dt) {
  if (!(dt > 0.0)) throw StructuralError("stepper: dt must be positive");
  const int n = grid_.points;
  const int modes = grid_.total_points();
  const int ncomp = static_cast<int>(diffusion_.size());

  double a = 0.0, b = 0.0;
  if (x_) {
    a = x_->coords[0];
    if (x_->kind == GroupKind::SE2) {
      b = x_->coords[1];
      rot_speed_ = x_->coords[2];
      cfl_ok_ = std::abs(rot_speed_) * grid_.extent * dt_ / grid_.spacing() <= 0.5 + 1e-12;
    }
  }

  Eigen::ArrayXd xio = fft::wavenumbers_odd(n, grid_.extent);
  Eigen::ArrayXd xi = fft::wavenumbers(n, grid_.extent);

  solve_full_.resize(modes, ncomp);
  solve_half_.resize(modes, ncomp);
  fwd_half_.resize(modes, ncomp);
  for (int c = 0; c < ncomp; ++c) {
    for (int m = 0; m < modes; ++m) {
      double x1o, x2o, xisq;
      if (grid_.dim == 1) {
        x1o = xio[m];
        x2o = 0.0;
        xisq = xi[m] * xi[m];
      } else {
        int k1 = m % n, k2 = m / n;
        x1o = xio[k1];
        x2o = xio[k2];
        xisq = xi[k1] * xi[k1] + xi[k2] * xi[k2];
      }
      // symbol of A - pi_trans(X): -d xi^2 + i(a xi1 + b xi2)
      Cplx sym(-diffusion_[c] * xisq, a * x1o + b * x2o);
      solve_full_(m, c) = 1.0 / (1.0 - dt_ * sym);
      solve_half_(m, c) = 1.0 / (1.0 - 0.5 * dt_ * sym);
      fwd_half_(m, c) = 1.0 + 0.5 * dt_ * sym;
    }
  }
}

Field SemiImplicitStepper::apply_multiplier(const Field& f, const Eigen::MatrixXcd& mult) const {
  const int n = grid_.points;
  Field out(grid_, f.components());
  for (int c = 0; c < f.components(); ++c) {
    if (grid_.dim == 1) {
      Eigen::VectorXcd v = f.values.col(c).cast<Cplx>();
      fft::transform(v.data(), n, 1, false);
      v.array() *= mult.col(c).array();
      fft::transform(v.data(), n, 1, true);
      out.values.col(c) = v.real();
    } else {
      Eigen::MatrixXcd v =
          Eigen::Map<const Eigen::MatrixXd>(f.values.col(c).data(), n, n).cast<Cplx>();
      fft::forward2(v);
      // mode m = k2*n + k1 matches the (k1,k2) layout used at construction
      Eigen::Map<const Eigen::MatrixXcd> mm(mult.col(c).data(), n, n);
      v.array() *= mm.array();
      fft::inverse2(v);
      Eigen::MatrixXd re = v.real();
      out.values.col(c) = Eigen::Map<const Eigen::VectorXd>(re.data(), re.size());
    }
  }
  return out;
}

Field SemiImplicitStepper::solve_implicit(const Field& rhs) const {
  return apply_multiplier(rhs, solve_full_);
}

Field SemiImplicitStepper::rotation_term(const Field& v) const {
  if (!x_ || x_->kind != GroupKind::SE2 || rot_speed_ == 0.0)
    return Field::zero(v.grid, v.components());
  Eigen::VectorXd c = Eigen::VectorXd::Zero(3);
  c[2] = rot_speed_;
  return -1.0 * infinitesimal_act(AlgebraElement::from_coords(GroupKind::SE2, c), v);
}

Field SemiImplicitStepper::explicit_part(const LinearOperator& op, const Field& v) const {
  Field out(v.grid, v.components());
  out.values.setZero();
  const int ncomp = v.components();
  for (int i = 0; i < ncomp; ++i)
    for (int j = 0; j < ncomp; ++j)
      out.values.col(i).array() +=
          op.jacobian().col(i + ncomp * j).array() * v.values.col(j).array();
  if (rot_speed_ != 0.0) out += rotation_term(v);
  return out;
}

Field SemiImplicitStepper::euler(const LinearOperator& op, const Field& v) const {
  Field rhs = v + dt_ * explicit_part(op, v);
  return solve_implicit(rhs);
}

Field SemiImplicitStepper::heun(const LinearOperator& op, const Field& v) const {
  Field e0 = explicit_part(op, v);
  Field pred = solve_implicit(v + dt_ * e0);
  Field e1 = explicit_part(op, pred);
  Field rhs = apply_multiplier(v, fwd_half_) + (0.5 * dt_) * (e0 + e1);
  return apply_multiplier(rhs, solve_half_);
}

}  // namespace orbitrack
