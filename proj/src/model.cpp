#include "orbitrack/model.hpp"

#include <cmath>

#include "orbitrack/errors.hpp"
#include "orbitrack/fft.hpp"

namespace orbitrack {

Field Model::apply_reaction(const Field& u) const {
  if (u.components() != components_)
    throw StructuralError("apply_reaction: component count does not match the model");
  const int n = components_;
  Field out(u.grid, n);
  std::vector<double> in(n), fu(n);
  for (int p = 0; p < u.grid.total_points(); ++p) {
    for (int c = 0; c < n; ++c) in[c] = u.values(p, c);
    reaction(in.data(), fu.data());
    for (int c = 0; c < n; ++c) out.values(p, c) = fu[c];
  }
  return out;
}

Eigen::MatrixXd Model::jacobian_values(const Field& u) const {
  const int n = components_;
  Eigen::MatrixXd jac(u.grid.total_points(), n * n);
  std::vector<double> in(n), j(n * n);
  for (int p = 0; p < u.grid.total_points(); ++p) {
    for (int c = 0; c < n; ++c) in[c] = u.values(p, c);
    reaction_jacobian(in.data(), j.data());
    for (int k = 0; k < n * n; ++k) jac(p, k) = j[k];
  }
  return jac;
}

// ---------------------------------------------------------------------------
// LinearOperator
// ---------------------------------------------------------------------------

LinearOperator::LinearOperator(Grid grid, Eigen::VectorXd diffusion,
                               Eigen::MatrixXd jacobian_values, std::optional<AlgebraElement> x)
    : grid_(grid),
      ncomp_(static_cast<int>(diffusion.size())),
      diffusion_(std::move(diffusion)),
      jac_(std::move(jacobian_values)),
      x_(std::move(x)) {
  if (jac_.rows() != grid_.total_points() || jac_.cols() != ncomp_ * ncomp_)
    throw StructuralError("LinearOperator: jacobian table has wrong shape");
}

Field LinearOperator::apply(const Field& v) const {
  if (!(v.grid == grid_) || v.components() != ncomp_)
    throw StructuralError("LinearOperator: operand mismatch");
  Field out = scaled_laplacian(v, diffusion_);
  // pointwise Jacobian
  for (int i = 0; i < ncomp_; ++i)
    for (int j = 0; j < ncomp_; ++j)
      out.values.col(i).array() += jac_.col(i + ncomp_ * j).array() * v.values.col(j).array();
  if (x_) out -= infinitesimal_act(*x_, v);
  return out;
}

Eigen::VectorXd LinearOperator::apply_flat(const Eigen::VectorXd& v) const {
  return apply(Field::from_flat(grid_, ncomp_, v)).flat();
}

Field LinearOperator::apply_transpose(const Field& v) const {
  if (!(v.grid == grid_) || v.components() != ncomp_)
    throw StructuralError("LinearOperator: operand mismatch");
  Field out = scaled_laplacian(v, diffusion_);
  for (int i = 0; i < ncomp_; ++i)
    for (int j = 0; j < ncomp_; ++j)
      out.values.col(i).array() += jac_.col(j + ncomp_ * i).array() * v.values.col(j).array();
  if (x_) out += infinitesimal_act(*x_, v);
  return out;
}

Eigen::VectorXd LinearOperator::apply_transpose_flat(const Eigen::VectorXd& v) const {
  return apply_transpose(Field::from_flat(grid_, ncomp_, v)).flat();
}

namespace {

// Dense circulant matrix of a 1D Fourier multiplier: first column is the
// multiplier applied to a delta, remaining columns are its cyclic shifts.
Eigen::MatrixXd circulant_from_symbol(int n, const Eigen::ArrayXcd& symbol) {
  Eigen::VectorXcd col0 = Eigen::VectorXcd::Zero(n);
  col0[0] = 1.0;
  fft::transform(col0.data(), n, 1, false);
  for (int k = 0; k < n; ++k) col0[k] *= symbol[k];
  fft::transform(col0.data(), n, 1, true);
  Eigen::VectorXd c = col0.real();
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = c[(i - j + n) % n];
  return m;
}

}  // namespace

Eigen::MatrixXd LinearOperator::assemble() const {
  const int n = grid_.points;
  const int pts = grid_.total_points();
  const int sz = size();

  Eigen::ArrayXd xi = fft::wavenumbers(n, grid_.extent);
  Eigen::ArrayXd xio = fft::wavenumbers_odd(n, grid_.extent);
  Eigen::MatrixXd lap1 = circulant_from_symbol(n, (-xi * xi).cast<std::complex<double>>());
  Eigen::MatrixXd d1 = circulant_from_symbol(
      n, (std::complex<double>(0, 1) * xio.cast<std::complex<double>>()));

  // per-point Laplacian (dim-aware) and first derivatives as pts x pts blocks
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(pts, pts);
  Eigen::MatrixXd dx1, dx2;
  if (grid_.dim == 1) {
    lap = lap1;
    dx1 = d1;
  } else {
    // p = iy*n + ix: d/dx1 = I (x) D1 acting within iy blocks, d/dx2 across
    dx1 = Eigen::MatrixXd::Zero(pts, pts);
    dx2 = Eigen::MatrixXd::Zero(pts, pts);
    for (int iy = 0; iy < n; ++iy)
      dx1.block(iy * n, iy * n, n, n) = d1;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        dx2.block(a * n, b * n, n, n) = d1(a, b) * Eigen::MatrixXd::Identity(n, n);
    for (int iy = 0; iy < n; ++iy) lap.block(iy * n, iy * n, n, n) = lap1;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        lap.block(a * n, b * n, n, n) += lap1(a, b) * Eigen::MatrixXd::Identity(n, n);
  }

  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(sz, sz);
  for (int c = 0; c < ncomp_; ++c)
    op.block(c * pts, c * pts, pts, pts) = diffusion_[c] * lap;

  // pointwise Jacobian couples components at each point
  for (int i = 0; i < ncomp_; ++i)
    for (int j = 0; j < ncomp_; ++j)
      op.block(i * pts, j * pts, pts, pts).diagonal() += jac_.col(i + ncomp_ * j);

  if (x_) {
    // subtract pi(X) = -a d1 - b d2 + w (x2 d1 - x1 d2)
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(pts, pts);
    if (grid_.dim == 1) {
      pi = -x_->coords[0] * dx1;
    } else {
      double a = x_->coords[0], b = x_->coords[1], w = x_->coords[2];
      pi = -a * dx1 - b * dx2;
      if (w != 0.0) {
        Eigen::ArrayXd coords = grid_.axis_coords();
        Eigen::VectorXd x1v(pts), x2v(pts);
        for (int iy = 0; iy < n; ++iy)
          for (int ix = 0; ix < n; ++ix) {
            x1v[iy * n + ix] = coords[ix];
            x2v[iy * n + ix] = coords[iy];
          }
        pi += w * (x2v.asDiagonal() * dx1 - x1v.asDiagonal() * dx2);
      }
    }
    for (int c = 0; c < ncomp_; ++c) op.block(c * pts, c * pts, pts, pts) -= pi;
  }
  return op;
}

// ---------------------------------------------------------------------------
// Module operations
// ---------------------------------------------------------------------------

Field apply_rhs(const Model& m, const Field& u) {
  Field out = scaled_laplacian(u, m.diffusion());
  out += m.apply_reaction(u);
  if (!out.all_finite()) {
    for (int c = 0; c < out.components(); ++c)
      for (int p = 0; p < out.grid.total_points(); ++p)
        if (!std::isfinite(out.values(p, c)))
          throw NumericalError("apply_rhs: non-finite value at point " + std::to_string(p) +
                               ", component " + std::to_string(c));
  }
  return out;
}

LinearOperator linearize(const Model& m, const Field& u) {
  return LinearOperator(u.grid, m.diffusion(), m.jacobian_values(u), std::nullopt);
}

LinearOperator comoving_operator(const Model& m, const AlgebraElement& x, const Field& ustar) {
  if (x.kind != m.group())
    throw StructuralError("comoving_operator: algebra element not in the model's group");
  return LinearOperator(ustar.grid, m.diffusion(), m.jacobian_values(ustar), x);
}

// ---------------------------------------------------------------------------
// Concrete models
// ---------------------------------------------------------------------------

namespace {

double param_or(const std::map<std::string, double>& p, const std::string& key, double dflt) {
  auto it = p.find(key);
  return it == p.end() ? dflt : it->second;
}

// f(u) = u(u-a)(1-u), the bistable cubic.
double cubic(double u, double a) { return u * (u - a) * (1.0 - u); }
double cubic_prime(double u, double a) { return -3.0 * u * u + 2.0 * (1.0 + a) * u - a; }

class FitzHughNagumoModel final : public Model {
 public:
  explicit FitzHughNagumoModel(const std::map<std::string, double>& p)
      : Model("fhn", 2,
              (Eigen::VectorXd(2) << 1.0, param_or(p, "delta", 0.01)).finished(),
              GroupKind::Translation1D,
              {{"a", param_or(p, "a", 0.1)},
               {"eps", param_or(p, "eps", 0.01)},
               {"gamma", param_or(p, "gamma", 2.0)},
               {"delta", param_or(p, "delta", 0.01)}}),
        a_(param_or(p, "a", 0.1)),
        eps_(param_or(p, "eps", 0.01)),
        gamma_(param_or(p, "gamma", 2.0)) {}

  void reaction(const double* u, double* out) const override {
    out[0] = cubic(u[0], a_) - u[1];
    out[1] = eps_ * (u[0] - gamma_ * u[1]);
  }
  void reaction_jacobian(const double* u, double* out) const override {
    out[0] = cubic_prime(u[0], a_);  // dF0/du
    out[1] = eps_;                   // dF1/du
    out[2] = -1.0;                   // dF0/dv
    out[3] = -eps_ * gamma_;         // dF1/dv
  }

 private:
  double a_, eps_, gamma_;
};

class NagumoModel final : public Model {
 public:
  explicit NagumoModel(const std::map<std::string, double>& p)
      : Model("nagumo", 1, Eigen::VectorXd::Ones(1), GroupKind::Translation1D,
              {{"a", param_or(p, "a", 0.25)}}),
        a_(param_or(p, "a", 0.25)) {}

  void reaction(const double* u, double* out) const override { out[0] = cubic(u[0], a_); }
  void reaction_jacobian(const double* u, double* out) const override {
    out[0] = cubic_prime(u[0], a_);
  }

 private:
  double a_;
};

// Two-component isotropic reaction with rho = u^2 + v^2:
//   F(w) = lambda(rho) w + kappa(rho) J w,  J = [[0,-1],[1,0]],
//   lambda(rho) = -mu + beta rho - rho^2,  kappa(rho) = nu - q rho.
// Supports localized vortex profiles that rotate rigidly.
class RotatingLambdaOmegaModel final : public Model {
 public:
  explicit RotatingLambdaOmegaModel(const std::map<std::string, double>& p)
      : Model("rotating_lw", 2,
              Eigen::VectorXd::Constant(2, param_or(p, "d", 1.0)), GroupKind::SE2,
              {{"mu", param_or(p, "mu", 0.3)},
               {"beta", param_or(p, "beta", 2.0)},
               {"nu", param_or(p, "nu", 1.0)},
               {"q", param_or(p, "q", 1.0)},
               {"d", param_or(p, "d", 1.0)}}),
        mu_(param_or(p, "mu", 0.3)),
        beta_(param_or(p, "beta", 2.0)),
        nu_(param_or(p, "nu", 1.0)),
        q_(param_or(p, "q", 1.0)) {}

  void reaction(const double* w, double* out) const override {
    double u = w[0], v = w[1];
    double rho = u * u + v * v;
    double lam = -mu_ + beta_ * rho - rho * rho;
    double kap = nu_ - q_ * rho;
    out[0] = lam * u - kap * v;
    out[1] = kap * u + lam * v;
  }
  void reaction_jacobian(const double* w, double* out) const override {
    double u = w[0], v = w[1];
    double rho = u * u + v * v;
    double lam = -mu_ + beta_ * rho - rho * rho;
    double kap = nu_ - q_ * rho;
    double dlam = beta_ - 2.0 * rho;
    double dkap = -q_;
    out[0] = lam + 2.0 * u * u * dlam - 2.0 * u * v * dkap;  // dF0/du
    out[1] = kap + 2.0 * u * u * dkap + 2.0 * u * v * dlam;  // dF1/du
    out[2] = 2.0 * u * v * dlam - kap - 2.0 * v * v * dkap;  // dF0/dv
    out[3] = 2.0 * u * v * dkap + lam + 2.0 * v * v * dlam;  // dF1/dv
  }

 private:
  double mu_, beta_, nu_, q_;
};

class DiffusionModel final : public Model {
 public:
  explicit DiffusionModel(const std::map<std::string, double>& p)
      : Model("diffusion", static_cast<int>(param_or(p, "components", 1)),
              Eigen::VectorXd::Constant(static_cast<int>(param_or(p, "components", 1)),
                                        param_or(p, "d", 1.0)),
              param_or(p, "dim", 1) == 1 ? GroupKind::Translation1D : GroupKind::SE2,
              {{"d", param_or(p, "d", 1.0)},
               {"dim", param_or(p, "dim", 1)},
               {"components", param_or(p, "components", 1)}}) {}

  void reaction(const double*, double* out) const override {
    for (int c = 0; c < components_; ++c) out[c] = 0.0;
  }
  void reaction_jacobian(const double*, double* out) const override {
    for (int k = 0; k < components_ * components_; ++k) out[k] = 0.0;
  }
};

}  // namespace

std::shared_ptr<Model> make_model(const std::string& name,
                                  const std::map<std::string, double>& params) {
  if (name == "fhn") return std::make_shared<FitzHughNagumoModel>(params);
  if (name == "nagumo") return std::make_shared<NagumoModel>(params);
  if (name == "rotating_lw") return std::make_shared<RotatingLambdaOmegaModel>(params);
  if (name == "diffusion") return std::make_shared<DiffusionModel>(params);
  throw StructuralError("make_model: unknown model '" + name + "'");
}

}  // namespace orbitrack
