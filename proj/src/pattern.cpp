#include "orbitrack/pattern.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "orbitrack/errors.hpp"
#include "orbitrack/fft.hpp"
#include "orbitrack/krylov.hpp"
#include "orbitrack/stepping.hpp"

namespace orbitrack {

namespace {

using Cplx = std::complex<double>;

double cell_measure(const Grid& g) {
  double h = g.spacing();
  return g.dim == 1 ? h : h * h;
}

double flat_l2(const Grid& g, const Eigen::VectorXd& v) {
  return v.norm() * std::sqrt(cell_measure(g));
}

std::vector<AlgebraElement> basis_elements(GroupKind kind) {
  std::vector<AlgebraElement> out;
  for (int j = 0; j < algebra_dim(kind); ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(algebra_dim(kind));
    e[j] = 1.0;
    out.push_back(AlgebraElement::from_coords(kind, e));
  }
  return out;
}

// sup |u| over the outermost cell ring.
double boundary_sup(const Field& f) {
  const Grid& g = f.grid;
  const int n = g.points;
  double m = 0.0;
  if (g.dim == 1) {
    for (int c = 0; c < f.components(); ++c)
      m = std::max({m, std::abs(f.values(0, c)), std::abs(f.values(n - 1, c))});
  } else {
    for (int c = 0; c < f.components(); ++c)
      for (int i = 0; i < n; ++i) {
        m = std::max(m, std::abs(f.values(i, c)));
        m = std::max(m, std::abs(f.values((n - 1) * n + i, c)));
        m = std::max(m, std::abs(f.values(i * n, c)));
        m = std::max(m, std::abs(f.values(i * n + n - 1, c)));
      }
  }
  return m;
}

Field comoving_residual(const Model& m, const AlgebraElement& x, const Field& u) {
  Field r = scaled_laplacian(u, m.diffusion());
  r += m.apply_reaction(u);
  r -= infinitesimal_act(x, u);
  return r;
}

// Dense bordered Newton step for [du; ds].
Eigen::VectorXd dense_newton_step(const Model& model, const AlgebraElement& x, const Field& u,
                                  const std::vector<Field>& phase_rows,
                                  const std::vector<AlgebraElement>& basis,
                                  const Eigen::VectorXd& rhs) {
  const int nf = u.size();
  const int m = static_cast<int>(phase_rows.size());
  auto op = comoving_operator(model, x, u);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nf + m, nf + m);
  jac.topLeftCorner(nf, nf) = op.assemble();
  const double w = cell_measure(u.grid);
  for (int j = 0; j < m; ++j) {
    jac.block(0, nf + j, nf, 1) = -infinitesimal_act(basis[j], u).flat();
    jac.block(nf + j, 0, 1, nf) = w * phase_rows[j].flat().transpose();
  }
  return jac.partialPivLu().solve(rhs);
}

// Matrix-free bordered Newton step via preconditioned GMRES.
Eigen::VectorXd krylov_newton_step(const Model& model, const AlgebraElement& x, const Field& u,
                                   const std::vector<Field>& phase_rows,
                                   const std::vector<AlgebraElement>& basis,
                                   const Eigen::VectorXd& rhs, const ProfileOptions& opts) {
  const int nf = u.size();
  const int m = static_cast<int>(phase_rows.size());
  const Grid grid = u.grid;
  const int ncomp = u.components();
  auto op = comoving_operator(model, x, u);
  const double w = cell_measure(grid);

  std::vector<Eigen::VectorXd> speed_cols;
  for (int j = 0; j < m; ++j) speed_cols.push_back(-infinitesimal_act(basis[j], u).flat());

  ApplyFn<double> apply = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(nf + m);
    Eigen::VectorXd top = op.apply_flat(v.head(nf));
    for (int j = 0; j < m; ++j) top += v[nf + j] * speed_cols[j];
    out.head(nf) = top;
    for (int j = 0; j < m; ++j) out[nf + j] = w * phase_rows[j].flat().dot(v.head(nf));
    return out;
  };

  // constant-coefficient symbol inverse with a damping shift
  const double kappa = 1.0 + op.jacobian().cwiseAbs().maxCoeff();
  double a = x.coords[0];
  double b = (x.kind == GroupKind::SE2) ? x.coords[1] : 0.0;
  const Eigen::VectorXd diff = model.diffusion();
  ApplyFn<double> precond = [&grid, ncomp, nf, m, kappa, a, b, diff](const Eigen::VectorXd& v) {
    Field f = Field::from_flat(grid, ncomp, v.head(nf));
    Field pf = apply_symbol(f, [&](double x1, double x2, double xisq, int c) {
      return 1.0 / Cplx(-diff[c] * xisq - kappa, a * x1 + b * x2);
    });
    Eigen::VectorXd out(nf + m);
    out.head(nf) = pf.flat();
    for (int j = 0; j < m; ++j) out[nf + j] = v[nf + j] / kappa;
    return out;
  };

  Eigen::VectorXd sol = Eigen::VectorXd::Zero(nf + m);
  auto res = gmres<double>(apply, precond, rhs, sol, opts.gmres_restart, opts.gmres_max_iter,
                           opts.gmres_tol);
  if (!res.converged && res.residual > 0.3)
    throw ConvergenceError("solve_profile: inner GMRES stalled", res.residual);
  return sol;
}

}  // namespace

Pattern solve_profile(std::shared_ptr<Model> model, const Field& guess,
                      const AlgebraElement& guess_x, const ProfileOptions& opts) {
  if (guess.components() != model->components())
    throw StructuralError("solve_profile: guess does not match the model");
  if (guess_x.kind != model->group())
    throw StructuralError("solve_profile: group kind mismatch");

  const Grid grid = guess.grid;
  const int nf = guess.size();
  const int m = opts.fix_x ? 0 : algebra_dim(guess_x.kind);
  auto basis = basis_elements(guess_x.kind);

  // phase conditions pin the orbit: orthogonality to the guess's tangents
  std::vector<Field> phase_rows;
  for (int j = 0; j < m; ++j) phase_rows.push_back(infinitesimal_act(basis[j], guess));

  Field u = guess;
  Eigen::VectorXd speeds = guess_x.coords;
  AlgebraElement x = guess_x;
  const double w = cell_measure(grid);

  auto combined_residual = [&](const Field& uu, const AlgebraElement& xx) {
    Field r = comoving_residual(*model, xx, uu);
    double pc_sq = 0.0;
    for (int j = 0; j < m; ++j) {
      double pc = w * phase_rows[j].flat().dot((uu - guess).flat());
      pc_sq += pc * pc;
    }
    double rl2 = flat_l2(grid, r.flat());
    return std::sqrt(rl2 * rl2 + pc_sq);
  };

  double res_norm = 0.0;
  bool converged = false;
  for (int it = 0; it < opts.max_iter; ++it) {
    res_norm = combined_residual(u, x);
    if (res_norm <= opts.tol) {
      converged = true;
      break;
    }

    Field r = comoving_residual(*model, x, u);
    Eigen::VectorXd rhs(nf + m);
    rhs.head(nf) = -r.flat();
    for (int j = 0; j < m; ++j) rhs[nf + j] = -w * phase_rows[j].flat().dot((u - guess).flat());

    Eigen::VectorXd step = (nf + m <= opts.dense_limit)
                               ? dense_newton_step(*model, x, u, phase_rows, basis, rhs)
                               : krylov_newton_step(*model, x, u, phase_rows, basis, rhs, opts);

    double lambda = 1.0;
    bool accepted = false;
    for (int half = 0; half < 12; ++half) {
      Field u_try = Field::from_flat(grid, u.components(), u.flat() + lambda * step.head(nf));
      Eigen::VectorXd s_try = speeds + lambda * step.tail(m);
      AlgebraElement x_try = opts.fix_x ? x : AlgebraElement::from_coords(x.kind, s_try);
      double rn = combined_residual(u_try, x_try);
      if (rn < res_norm || rn <= opts.tol) {
        u = u_try;
        speeds = s_try;
        x = x_try;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) throw ConvergenceError("solve_profile: line search failed", res_norm);
  }
  if (!converged)
    throw ConvergenceError("solve_profile: no convergence in max_iter", res_norm);

  if (opts.check_boundary && boundary_sup(u) > opts.boundary_decay_tol) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3e", boundary_sup(u));
    throw DomainTooSmallError(
        std::string("solve_profile: profile does not decay at the box boundary (sup = ") + buf +
        ")");
  }

  Pattern p;
  p.model = std::move(model);
  p.ustar = u;
  p.x = x;
  p.residual_norm = flat_l2(grid, comoving_residual(*p.model, x, u).flat());
  return p;
}

// ---------------------------------------------------------------------------
// Front solver: bounded interval, clamped ends, fourth-order differences
// ---------------------------------------------------------------------------

Pattern solve_front_profile(std::shared_ptr<Model> model, const Field& guess, double guess_speed,
                            const ProfileOptions& opts) {
  if (guess.grid.dim != 1) throw StructuralError("solve_front_profile: 1D only");
  if (model->group() != GroupKind::Translation1D)
    throw StructuralError("solve_front_profile: translation models only");

  const Grid grid = guess.grid;
  const int n = grid.points;
  const int nc = model->components();
  const int nf = n * nc;
  const double h = grid.spacing();
  const Eigen::VectorXd diff = model->diffusion();

  Eigen::VectorXd left(nc), right(nc);
  for (int c = 0; c < nc; ++c) {
    left[c] = guess.values(0, c);
    right[c] = guess.values(n - 1, c);
  }

  auto d1 = [&](const Eigen::MatrixXd& v, int i, int c) {
    if (i >= 2 && i <= n - 3)
      return (v(i - 2, c) - 8 * v(i - 1, c) + 8 * v(i + 1, c) - v(i + 2, c)) / (12 * h);
    return (v(i + 1, c) - v(i - 1, c)) / (2 * h);
  };
  auto d2 = [&](const Eigen::MatrixXd& v, int i, int c) {
    if (i >= 2 && i <= n - 3)
      return (-v(i - 2, c) + 16 * v(i - 1, c) - 30 * v(i, c) + 16 * v(i + 1, c) - v(i + 2, c)) /
             (12 * h * h);
    return (v(i - 1, c) - 2 * v(i, c) + v(i + 1, c)) / (h * h);
  };

  auto residual = [&](const Field& u, double c_speed) {
    Eigen::VectorXd r(nf);
    std::vector<double> uin(nc), fu(nc);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < nc; ++c) uin[c] = u.values(i, c);
      model->reaction(uin.data(), fu.data());
      for (int c = 0; c < nc; ++c) {
        int row = c * n + i;
        if (i == 0)
          r[row] = u.values(i, c) - left[c];
        else if (i == n - 1)
          r[row] = u.values(i, c) - right[c];
        else
          r[row] = diff[c] * d2(u.values, i, c) + c_speed * d1(u.values, i, c) + fu[c];
      }
    }
    return r;
  };

  Eigen::VectorXd phase_row = Eigen::VectorXd::Zero(nf);
  for (int c = 0; c < nc; ++c)
    for (int i = 1; i < n - 1; ++i) phase_row[c * n + i] = d1(guess.values, i, c) * h;

  Field u = guess;
  double c_speed = guess_speed;

  auto total_res = [&](const Field& uu, double cc) {
    Eigen::VectorXd r = residual(uu, cc);
    double pc = phase_row.dot((uu - guess).flat());
    return std::sqrt(r.squaredNorm() * h + pc * pc);
  };

  bool converged = false;
  double res_norm = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    res_norm = total_res(u, c_speed);
    if (res_norm <= opts.tol) {
      converged = true;
      break;
    }

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(nf) * (6 + nc));
    std::vector<double> uin(nc), jv(nc * nc);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < nc; ++c) uin[c] = u.values(i, c);
      model->reaction_jacobian(uin.data(), jv.data());
      for (int c = 0; c < nc; ++c) {
        int row = c * n + i;
        if (i == 0 || i == n - 1) {
          trip.emplace_back(row, row, 1.0);
          continue;
        }
        if (i >= 2 && i <= n - 3) {
          double w2 = 12 * h * h, w1 = 12 * h;
          trip.emplace_back(row, c * n + i - 2, -diff[c] / w2 + c_speed / w1);
          trip.emplace_back(row, c * n + i - 1, 16 * diff[c] / w2 - 8 * c_speed / w1);
          trip.emplace_back(row, c * n + i, -30 * diff[c] / w2);
          trip.emplace_back(row, c * n + i + 1, 16 * diff[c] / w2 + 8 * c_speed / w1);
          trip.emplace_back(row, c * n + i + 2, -diff[c] / w2 - c_speed / w1);
        } else {
          trip.emplace_back(row, c * n + i - 1, diff[c] / (h * h) - c_speed / (2 * h));
          trip.emplace_back(row, c * n + i, -2 * diff[c] / (h * h));
          trip.emplace_back(row, c * n + i + 1, diff[c] / (h * h) + c_speed / (2 * h));
        }
        for (int c2 = 0; c2 < nc; ++c2) trip.emplace_back(row, c2 * n + i, jv[c + nc * c2]);
        trip.emplace_back(row, nf, d1(u.values, i, c));
      }
    }
    for (int k = 0; k < nf; ++k)
      if (phase_row[k] != 0.0) trip.emplace_back(nf, k, phase_row[k]);

    Eigen::SparseMatrix<double> jmat(nf + 1, nf + 1);
    jmat.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(jmat);
    if (lu.info() != Eigen::Success)
      throw ConvergenceError("solve_front_profile: singular Jacobian", res_norm);

    Eigen::VectorXd rhs(nf + 1);
    rhs.head(nf) = -residual(u, c_speed);
    rhs[nf] = -phase_row.dot((u - guess).flat());
    Eigen::VectorXd step = lu.solve(rhs);

    double lambda = 1.0;
    bool accepted = false;
    for (int half = 0; half < 12; ++half) {
      Field u_try = Field::from_flat(grid, nc, u.flat() + lambda * step.head(nf));
      double c_try = c_speed + lambda * step[nf];
      double rn = total_res(u_try, c_try);
      if (rn < res_norm || rn <= opts.tol) {
        u = u_try;
        c_speed = c_try;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) throw ConvergenceError("solve_front_profile: line search failed", res_norm);
  }
  if (!converged)
    throw ConvergenceError("solve_front_profile: no convergence in max_iter", res_norm);

  Pattern p;
  p.model = std::move(model);
  p.ustar = u;
  p.x = AlgebraElement::from_coords(GroupKind::Translation1D,
                                    Eigen::VectorXd::Constant(1, c_speed));
  p.residual_norm = res_norm;
  return p;
}

// ---------------------------------------------------------------------------
// Shift-invert eigenpairs
// ---------------------------------------------------------------------------

namespace {

// (op - tau I)^{-1} on complex vectors: dense LU or preconditioned GMRES.
class ShiftedSolver {
 public:
  ShiftedSolver(const LinearOperator& op, Cplx tau, bool dense, bool transpose,
                const DecompositionOptions& opts)
      : op_(op), tau_(tau), dense_(dense), transpose_(transpose), opts_(opts) {
    if (dense_) {
      Eigen::MatrixXd a = op_.assemble();
      if (transpose_) a.transposeInPlace();
      Eigen::MatrixXcd ac = a.cast<Cplx>();
      ac.diagonal().array() -= tau_;
      lu_ = std::make_unique<Eigen::PartialPivLU<Eigen::MatrixXcd>>(ac);
    } else {
      kappa_ = 1.0 + op_.jacobian().cwiseAbs().maxCoeff();
      if (op_.comoving_x()) {
        const auto& x = *op_.comoving_x();
        a_ = x.coords[0];
        if (x.kind == GroupKind::SE2) b_ = x.coords[1];
      }
      if (transpose_) {
        a_ = -a_;
        b_ = -b_;
      }
    }
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const {
    if (dense_) return lu_->solve(rhs);

    const Grid& g = op_.grid();
    const int nc = op_.components();
    ApplyFn<Cplx> apply = [this](const Eigen::VectorXcd& z) {
      Eigen::VectorXd re = z.real(), im = z.imag();
      Eigen::VectorXcd out(z.size());
      if (transpose_) {
        out.real() = op_.apply_transpose_flat(re);
        out.imag() = op_.apply_transpose_flat(im);
      } else {
        out.real() = op_.apply_flat(re);
        out.imag() = op_.apply_flat(im);
      }
      out -= tau_ * z;
      return out;
    };
    ApplyFn<Cplx> precond = [this, &g, nc](const Eigen::VectorXcd& z) {
      return apply_complex_symbol(z, g, nc, [this](double x1, double x2, double xisq, int c) {
        Cplx sym(-op_.diffusion()[c] * xisq - kappa_, a_ * x1 + b_ * x2);
        return 1.0 / (sym - tau_);
      });
    };
    Eigen::VectorXcd sol = Eigen::VectorXcd::Zero(rhs.size());
    auto res = gmres<Cplx>(apply, precond, rhs, sol, 250, 3000, 1e-8);
    if (!res.converged && res.residual > 1e-3)
      throw ConvergenceError("spectral_decomposition: shifted solve stalled", res.residual);
    return sol;
  }

 private:
  static Eigen::VectorXcd apply_complex_symbol(
      const Eigen::VectorXcd& z, const Grid& g, int nc,
      const std::function<Cplx(double, double, double, int)>& gain) {
    const int n = g.points;
    const int pts = g.total_points();
    Eigen::ArrayXd xio = fft::wavenumbers_odd(n, g.extent);
    Eigen::ArrayXd xi = fft::wavenumbers(n, g.extent);
    Eigen::VectorXcd out(z.size());
    for (int c = 0; c < nc; ++c) {
      Eigen::VectorXcd v = z.segment(c * pts, pts);
      if (g.dim == 1) {
        fft::transform(v.data(), n, 1, false);
        for (int k = 0; k < n; ++k) v[k] *= gain(xio[k], 0.0, xi[k] * xi[k], c);
        fft::transform(v.data(), n, 1, true);
      } else {
        Eigen::MatrixXcd m = Eigen::Map<Eigen::MatrixXcd>(v.data(), n, n);
        fft::forward2(m);
        for (int k2 = 0; k2 < n; ++k2)
          for (int k1 = 0; k1 < n; ++k1)
            m(k1, k2) *= gain(xio[k1], xio[k2], xi[k1] * xi[k1] + xi[k2] * xi[k2], c);
        fft::inverse2(m);
        v = Eigen::Map<Eigen::VectorXcd>(m.data(), pts);
      }
      out.segment(c * pts, pts) = v;
    }
    return out;
  }

  const LinearOperator& op_;
  Cplx tau_;
  bool dense_;
  bool transpose_;
  DecompositionOptions opts_;
  std::unique_ptr<Eigen::PartialPivLU<Eigen::MatrixXcd>> lu_;
  double kappa_ = 1.0;
  double a_ = 0.0, b_ = 0.0;
};

struct RitzPair {
  Cplx value;
  Eigen::VectorXcd vector;
  double residual;
};

// Arnoldi on (op - tau)^{-1}; pairs sorted by distance to tau.
std::vector<RitzPair> shift_invert_arnoldi(const LinearOperator& op, const ShiftedSolver& solver,
                                           Cplx tau, int krylov_dim, bool transpose,
                                           std::uint64_t seed) {
  const int nsz = op.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0, 1);
  Eigen::VectorXcd q0(nsz);
  for (int i = 0; i < nsz; ++i) q0[i] = Cplx(nd(rng), nd(rng));
  q0.normalize();

  std::vector<Eigen::VectorXcd> q{q0};
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(krylov_dim + 1, krylov_dim);
  int k = 0;
  for (; k < krylov_dim; ++k) {
    Eigen::VectorXcd w = solver.solve(q[k]);
    for (int j = 0; j <= k; ++j) {
      h(j, k) = q[j].dot(w);
      w -= h(j, k) * q[j];
    }
    for (int j = 0; j <= k; ++j) {  // one re-orthogonalization pass
      Cplx corr = q[j].dot(w);
      h(j, k) += corr;
      w -= corr * q[j];
    }
    h(k + 1, k) = w.norm();
    if (std::abs(h(k + 1, k)) < 1e-12) {
      ++k;
      break;
    }
    q.push_back(w / h(k + 1, k));
  }

  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(h.topLeftCorner(k, k));
  std::vector<RitzPair> pairs;
  for (int i = 0; i < k; ++i) {
    Cplx nu = es.eigenvalues()[i];
    if (std::abs(nu) < 1e-12) continue;
    Cplx lambda = tau + 1.0 / nu;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(nsz);
    for (int j = 0; j < k; ++j) v += es.eigenvectors()(j, i) * q[j];
    v.normalize();
    Eigen::VectorXd re = v.real(), im = v.imag();
    Eigen::VectorXcd av(nsz);
    if (transpose) {
      av.real() = op.apply_transpose_flat(re);
      av.imag() = op.apply_transpose_flat(im);
    } else {
      av.real() = op.apply_flat(re);
      av.imag() = op.apply_flat(im);
    }
    double res = (av - lambda * v).norm();
    pairs.push_back({lambda, std::move(v), res});
  }
  std::sort(pairs.begin(), pairs.end(), [&](const RitzPair& x, const RitzPair& y) {
    return std::abs(x.value - tau) < std::abs(y.value - tau);
  });
  return pairs;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spectral decomposition
// ---------------------------------------------------------------------------

void spectral_decomposition(Pattern& p, const DecompositionOptions& opts) {
  auto op = p.comoving();
  const Grid& grid = p.ustar.grid;
  const int m = p.group_dim();
  auto basis = basis_elements(p.x.kind);

  std::vector<Field> tangents;
  for (int j = 0; j < m; ++j) tangents.push_back(infinitesimal_act(basis[j], p.ustar));
  Eigen::MatrixXd gram(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      gram(i, j) = inner(tangents[i], tangents[j]) /
                   (norm_l2(tangents[i]) * norm_l2(tangents[j]) + 1e-300);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ges(gram);
  if (ges.eigenvalues().minCoeff() < 1e-6)
    throw DecompositionError("spectral_decomposition: center tangents are nearly dependent");

  double omega = (p.x.kind == GroupKind::SE2) ? p.x.coords[2] : 0.0;
  struct Target {
    Cplx tau;
    Cplx eigenvalue;
    int center_count;
  };
  std::vector<Target> targets;
  // iterative solves need the shift kept further from the eigenvalue to stay
  // well conditioned; dense factorizations are happy much closer
  const bool dense_path = op.size() <= opts.dense_limit;
  const double off = (dense_path ? 0.02 : 0.25) * (1.0 + std::abs(omega));
  targets.push_back({Cplx(off, 0.0), Cplx(0.0, 0.0), 1});
  if (p.x.kind == GroupKind::SE2) targets.push_back({Cplx(off, omega), Cplx(0.0, omega), 1});

  const bool dense = dense_path;
  const int kdim = std::max(8, 2 * (1 + opts.extra_pairs) + 4);
  const double scale = 1.0 + std::abs(omega) + op.jacobian().cwiseAbs().maxCoeff();

  std::vector<Cplx> center_vals;
  std::vector<Eigen::VectorXcd> center_right;
  std::vector<Eigen::VectorXcd> center_left;
  double worst_noncenter = -std::numeric_limits<double>::infinity();
  Cplx lead_val(0.0, 0.0);
  Eigen::VectorXcd lead_vec;

  for (const auto& t : targets) {
    ShiftedSolver right_solver(op, t.tau, dense, false, opts);
    auto pairs =
        shift_invert_arnoldi(op, right_solver, t.tau, kdim, false, 99 + center_vals.size());
    int taken = 0;
    for (auto& pr : pairs) {
      if (pr.residual > 1e-5 * scale) continue;
      bool is_center = taken < t.center_count &&
                       std::abs(pr.value - t.eigenvalue) < 0.25 * (1.0 + std::abs(omega));
      if (is_center) {
        center_vals.push_back(pr.value);
        center_right.push_back(pr.vector);
        ++taken;
      } else {
        if (pr.value.real() > worst_noncenter) {
          worst_noncenter = pr.value.real();
          lead_val = pr.value;
          lead_vec = pr.vector;
        }
      }
    }
    if (taken < t.center_count)
      throw DecompositionError("spectral_decomposition: center eigenvalue not found near target");

    ShiftedSolver left_solver(op, t.tau, dense, true, opts);
    auto lpairs =
        shift_invert_arnoldi(op, left_solver, t.tau, kdim, true, 1234 + center_vals.size());
    int ltaken = 0;
    for (auto& pr : lpairs) {
      if (pr.residual > 1e-5 * scale) continue;
      if (ltaken < t.center_count &&
          std::abs(pr.value - t.eigenvalue) < 0.25 * (1.0 + std::abs(omega))) {
        center_left.push_back(pr.vector);
        ++ltaken;
      }
    }
    if (ltaken < t.center_count)
      throw DecompositionError("spectral_decomposition: adjoint eigenvalue not found near target");
  }

  // real spans: a real eigenvalue's vector is de-phased and contributes its
  // real part; a complex pair contributes real and imaginary parts (the
  // conjugate eigenvalue is implied since the operator is real)
  const double im_tol = 1e-6 * (1.0 + std::abs(omega));
  auto real_span = [&](const std::vector<Eigen::VectorXcd>& vecs) {
    std::vector<Eigen::VectorXd> span;
    for (size_t i = 0; i < vecs.size(); ++i) {
      Eigen::VectorXcd v = vecs[i];
      if (std::abs(center_vals[i].imag()) <= im_tol) {
        int imax = 0;
        for (int j = 1; j < v.size(); ++j)
          if (std::abs(v[j]) > std::abs(v[imax])) imax = j;
        v *= std::abs(v[imax]) / v[imax];
        span.push_back(v.real());
      } else {
        span.push_back(v.real());
        span.push_back(v.imag());
      }
    }
    return span;
  };
  std::vector<Eigen::VectorXd> right_span = real_span(center_right);
  std::vector<Eigen::VectorXd> left_span = real_span(center_left);
  if (static_cast<int>(right_span.size()) != m || static_cast<int>(left_span.size()) != m)
    throw DecompositionError("spectral_decomposition: center space has unexpected dimension");

  Eigen::MatrixXd re_mat(op.size(), m), tan_mat(op.size(), m);
  for (int j = 0; j < m; ++j) {
    re_mat.col(j) = right_span[j];
    tan_mat.col(j) = tangents[j].flat();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_e(re_mat), qr_t(tan_mat);
  Eigen::MatrixXd qe = qr_e.householderQ() * Eigen::MatrixXd::Identity(op.size(), m);
  Eigen::MatrixXd qt = qr_t.householderQ() * Eigen::MatrixXd::Identity(op.size(), m);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(qe.transpose() * qt);
  double min_sv = svd.singularValues().minCoeff();
  double max_angle = std::acos(std::clamp(min_sv, -1.0, 1.0));
  p.max_principal_angle = max_angle;
  if (max_angle > opts.principal_angle_tol)
    throw DecompositionError(
        "spectral_decomposition: eigenspace does not match the group tangents (angle " +
        std::to_string(max_angle) + ")");

  // biorthogonal adjoints: phi^i = sum_k (G^{-1})_ik psi_k, G_kj = <psi_k, tangent_j>
  const double w = cell_measure(grid);
  Eigen::MatrixXd gmat(m, m);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j) gmat(k, j) = w * left_span[k].dot(tan_mat.col(j));
  Eigen::FullPivLU<Eigen::MatrixXd> glu(gmat);
  if (!glu.isInvertible())
    throw DecompositionError("spectral_decomposition: adjoint pairing is singular");
  Eigen::MatrixXd cmat = glu.inverse();

  p.center_tangents = tangents;
  p.adjoint_functions.clear();
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(op.size());
    for (int k = 0; k < m; ++k) phi += cmat(i, k) * left_span[k];
    p.adjoint_functions.push_back(Field::from_flat(grid, p.ustar.components(), phi));
  }

  p.center_eigenvalues.assign(center_vals.begin(), center_vals.end());
  if (p.x.kind == GroupKind::SE2)
    p.center_eigenvalues.push_back(std::conj(center_vals.back()));

  if (!std::isfinite(worst_noncenter))
    throw DecompositionError("spectral_decomposition: no non-center spectrum probed");
  p.spectral_gap = -worst_noncenter;
  p.leading_stable_eigenvalue = lead_val;
  {
    Eigen::VectorXd re = lead_vec.real();
    if (re.norm() < 1e-12) re = lead_vec.imag();
    re.normalize();
    p.leading_stable_mode = Field::from_flat(grid, p.ustar.components(), re);
  }
  if (opts.require_gap && p.spectral_gap <= 0.0)
    throw InstabilityError("spectral_decomposition: spectral gap is not positive (b = " +
                           std::to_string(p.spectral_gap) + ")");
  p.decomposed = true;
}

// ---------------------------------------------------------------------------
// Projections
// ---------------------------------------------------------------------------

AlgebraElement project_center(const Pattern& p, const Field& v) {
  if (!p.decomposed) throw StructuralError("project_center: decomposition not computed");
  const int m = p.group_dim();
  if (p.adjoint_functions.empty())  // trivial center space
    return AlgebraElement::zero(p.x.kind);
  Eigen::VectorXd coords(m);
  for (int i = 0; i < m; ++i) coords[i] = inner(p.adjoint_functions[i], v);
  return AlgebraElement::from_coords(p.x.kind, coords);
}

Field project_stable(const Pattern& p, const Field& v) {
  if (!p.decomposed) throw StructuralError("project_stable: decomposition not computed");
  if (p.adjoint_functions.empty()) return v;
  AlgebraElement y = project_center(p, v);
  Field out = v;
  for (int i = 0; i < p.group_dim(); ++i) out -= y.coords[i] * p.center_tangents[i];
  return out;
}

// ---------------------------------------------------------------------------
// Decay constants
// ---------------------------------------------------------------------------

StabilityConstants estimate_decay(Pattern& p, double t_max, int n_t, const DecayOptions& opts) {
  if (!p.decomposed) throw StructuralError("estimate_decay: decomposition not computed");
  if (!(t_max > 0.0) || n_t < 2) throw StructuralError("estimate_decay: bad sampling window");

  auto op = p.comoving();
  const Grid& grid = p.ustar.grid;
  const int nc = p.ustar.components();

  const double dt_save = t_max / n_t;
  const int steps_per_save = std::max(1, static_cast<int>(std::round(dt_save / opts.dt)));
  const double dt_eff = dt_save / steps_per_save;
  SemiImplicitStepper stepper(grid, p.model->diffusion(), p.x, dt_eff);
  if (!stepper.cfl_ok()) throw StructuralError("estimate_decay: dt violates the advective CFL");

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> nd(0, 1);
  auto random_field = [&]() {
    Field f(grid, nc);
    for (int c = 0; c < nc; ++c)
      for (int i = 0; i < grid.total_points(); ++i) f.values(i, c) = nd(rng);
    if (opts.zero_mean)
      for (int c = 0; c < nc; ++c) f.values.col(c).array() -= f.values.col(c).mean();
    return f;
  };

  Eigen::VectorXd times(n_t + 1);
  Eigen::VectorXd envelope = Eigen::VectorXd::Zero(n_t + 1);
  Eigen::VectorXd full_envelope = Eigen::VectorXd::Zero(n_t + 1);
  for (int s = 0; s < opts.samples; ++s) {
    // operator-norm convention: normalize the ambient sample, then project
    // (the stable projector is oblique, so ||P_s v|| can well exceed ||v||)
    Field v0 = random_field();
    v0 *= 1.0 / norm_l2(v0);
    Field v = project_stable(p, v0);
    Field vfull = random_field();
    vfull *= 1.0 / norm_l2(vfull);
    for (int j = 0; j <= n_t; ++j) {
      times[j] = j * dt_save;
      envelope[j] = std::max(envelope[j], norm_l2(v));
      full_envelope[j] = std::max(full_envelope[j], norm_l2(vfull));
      if (j < n_t)
        for (int k = 0; k < steps_per_save; ++k) {
          v = stepper.heun(op, v);
          vfull = stepper.heun(op, vfull);
        }
    }
  }

  std::vector<int> window;
  for (int j = 0; j <= n_t; ++j)
    if (times[j] >= opts.fit_start) window.push_back(j);
  if (window.size() < 2) throw StructuralError("estimate_decay: fit window too small");
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int j : window) {
    double y = std::log(envelope[j]);
    st += times[j];
    sy += y;
    stt += times[j] * times[j];
    sty += times[j] * y;
  }
  double nw = static_cast<double>(window.size());
  double slope = (nw * sty - st * sy) / (nw * stt - st * st);
  double a = -slope;
  if (!(a > 0.0))
    throw InstabilityError("estimate_decay: fitted decay rate is not positive (a = " +
                           std::to_string(a) + ")");
  double log_m = -std::numeric_limits<double>::infinity();
  for (int j = 0; j <= n_t; ++j)
    log_m = std::max(log_m, std::log(envelope[j]) + a * times[j]);

  StabilityConstants sc;
  sc.M = std::max(1.0, std::exp(log_m));
  sc.a = a;
  sc.M1 = 1.0;  // the discrete group action is an L2 isometry
  sc.M2 = std::max(1.0, full_envelope.maxCoeff());
  sc.M3 = sc.M1 * sc.M1 * sc.M;
  sc.fit_t0 = opts.fit_start;
  sc.fit_t1 = t_max;
  p.constants = sc;
  return sc;
}

}  // namespace orbitrack
