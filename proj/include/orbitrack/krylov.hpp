#ifndef ORBITRACK_KRYLOV_HPP
#define ORBITRACK_KRYLOV_HPP

#include <Eigen/Core>
#include <functional>

// Restarted GMRES on std::function operators; used by the matrix-free
// profile solver and the shift-invert eigensolver on grids too large for
// dense factorizations.

namespace orbitrack {

template <typename Scalar>
struct GmresResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // preconditioned relative residual
};

template <typename Scalar>
using ApplyFn = std::function<Eigen::Vector<Scalar, Eigen::Dynamic>(
    const Eigen::Vector<Scalar, Eigen::Dynamic>&)>;

/// Solves op(x) = b with left preconditioning (precond approximates op^{-1}).
/// `x` holds the initial guess on entry and the solution on exit.
template <typename Scalar>
GmresResult<Scalar> gmres(const ApplyFn<Scalar>& op, const ApplyFn<Scalar>& precond,
                          const Eigen::Vector<Scalar, Eigen::Dynamic>& b,
                          Eigen::Vector<Scalar, Eigen::Dynamic>& x, int restart, int max_iter,
                          double rtol) {
  using Vec = Eigen::Vector<Scalar, Eigen::Dynamic>;
  GmresResult<Scalar> out;
  const auto ident = [](const Vec& v) { return v; };
  auto prec = precond ? precond : ApplyFn<Scalar>(ident);

  Vec pb = prec(b);
  double bnorm = pb.norm();
  if (bnorm == 0.0) {
    x.setZero();
    out.converged = true;
    return out;
  }

  int total = 0;
  while (total < max_iter) {
    Vec r = prec(b - op(x));
    double beta = r.norm();
    out.residual = beta / bnorm;
    if (out.residual <= rtol) {
      out.converged = true;
      return out;
    }

    int m = std::min(restart, max_iter - total);
    std::vector<Vec> basis;
    basis.reserve(m + 1);
    basis.push_back(r / beta);
    Eigen::MatrixX<Scalar> h = Eigen::MatrixX<Scalar>::Zero(m + 1, m);
    // Givens rotations for the least-squares problem
    std::vector<Scalar> cs(m), sn(m);
    Eigen::VectorX<Scalar> g = Eigen::VectorX<Scalar>::Zero(m + 1);
    g[0] = beta;

    int k = 0;
    for (; k < m; ++k) {
      Vec w = prec(op(basis[k]));
      for (int j = 0; j <= k; ++j) {
        h(j, k) = basis[j].dot(w);
        w -= h(j, k) * basis[j];
      }
      h(k + 1, k) = w.norm();
      const bool breakdown = std::abs(h(k + 1, k)) < 1e-300;
      if (!breakdown) basis.push_back(w / h(k + 1, k));

      for (int j = 0; j < k; ++j) {
        Scalar t = Eigen::numext::conj(cs[j]) * h(j, k) + Eigen::numext::conj(sn[j]) * h(j + 1, k);
        h(j + 1, k) = -sn[j] * h(j, k) + cs[j] * h(j + 1, k);
        h(j, k) = t;
      }
      double denom = std::sqrt(std::norm(h(k, k)) + std::norm(h(k + 1, k)));
      if (denom == 0.0) {
        cs[k] = Scalar(1);
        sn[k] = Scalar(0);
      } else {
        cs[k] = h(k, k) / denom;
        sn[k] = h(k + 1, k) / denom;
      }
      h(k, k) = Eigen::numext::conj(cs[k]) * h(k, k) + Eigen::numext::conj(sn[k]) * h(k + 1, k);
      h(k + 1, k) = Scalar(0);
      g[k + 1] = -sn[k] * g[k];
      g[k] = Eigen::numext::conj(cs[k]) * g[k];
      ++total;
      out.iterations = total;
      out.residual = std::abs(g[k + 1]) / bnorm;
      if (out.residual <= rtol || breakdown || total >= max_iter) {
        ++k;
        break;
      }
    }

    // back-substitute the k x k triangular system
    Eigen::VectorX<Scalar> y = Eigen::VectorX<Scalar>::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      Scalar s = g[i];
      for (int j = i + 1; j < k; ++j) s -= h(i, j) * y[j];
      y[i] = s / h(i, i);
    }
    for (int i = 0; i < k; ++i) x += y[i] * basis[i];

    if (out.residual <= rtol) {
      out.converged = true;
      return out;
    }
  }
  return out;
}

}  // namespace orbitrack

#endif  // ORBITRACK_KRYLOV_HPP
