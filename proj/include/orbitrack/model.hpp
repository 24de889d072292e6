#ifndef ORBITRACK_MODEL_HPP
#define ORBITRACK_MODEL_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "orbitrack/field.hpp"
#include "orbitrack/lie.hpp"

// Concrete (S)PDE right-hand sides du = Au dt + F(u) dt: diagonal diffusion
// A = diag(d_i Lap) with the exact Fourier symbol, plus a pointwise reaction.

namespace orbitrack {

class Model {
 public:
  virtual ~Model() = default;

  const std::string& name() const { return name_; }
  int components() const { return components_; }
  const Eigen::VectorXd& diffusion() const { return diffusion_; }
  GroupKind group() const { return group_; }
  const std::map<std::string, double>& params() const { return params_; }

  /// Pointwise reaction F : R^n -> R^n. `u` and `out` have components() entries.
  virtual void reaction(const double* u, double* out) const = 0;
  /// Pointwise Jacobian F' : R^n -> R^{n x n}, column-major (out[i + n*j] =
  /// dF_i/du_j).
  virtual void reaction_jacobian(const double* u, double* out) const = 0;

  /// Optional second-order drift H(t,u); zero unless a model overrides it.
  virtual bool has_drift() const { return false; }
  virtual Field drift(double /*t*/, const Field& u) const {
    return Field::zero(u.grid, u.components());
  }

  Field apply_reaction(const Field& u) const;
  /// Pointwise Jacobian values as a (points x n*n) matrix, column (i + n*j).
  Eigen::MatrixXd jacobian_values(const Field& u) const;

 protected:
  Model(std::string name, int components, Eigen::VectorXd diffusion, GroupKind group,
        std::map<std::string, double> params)
      : name_(std::move(name)),
        components_(components),
        diffusion_(std::move(diffusion)),
        group_(group),
        params_(std::move(params)) {}

  std::string name_;
  int components_;
  Eigen::VectorXd diffusion_;
  GroupKind group_;
  std::map<std::string, double> params_;
};

/// Linear map on fields: v -> diag(d_i Lap) v + J(x) v - pi(X) v, with the
/// comoving term present only when X is set. A dense matrix representation
/// is available on demand for eigenproblems and bordered Newton solves.
class LinearOperator {
 public:
  LinearOperator(Grid grid, Eigen::VectorXd diffusion, Eigen::MatrixXd jacobian_values,
                 std::optional<AlgebraElement> x);

  Field apply(const Field& v) const;
  Eigen::VectorXd apply_flat(const Eigen::VectorXd& v) const;

  /// L2-adjoint action: A and the grid measure are symmetric, pi(X) is
  /// antisymmetric, the pointwise Jacobian transposes.
  Field apply_transpose(const Field& v) const;
  Eigen::VectorXd apply_transpose_flat(const Eigen::VectorXd& v) const;

  /// Dense matrix (size x size), built from circulant spectral blocks plus
  /// the pointwise Jacobian; identical to apply() up to roundoff.
  Eigen::MatrixXd assemble() const;

  const Grid& grid() const { return grid_; }
  int components() const { return ncomp_; }
  int size() const { return grid_.total_points() * ncomp_; }
  const std::optional<AlgebraElement>& comoving_x() const { return x_; }
  const Eigen::VectorXd& diffusion() const { return diffusion_; }
  /// Pointwise Jacobian table, points x (n*n), column (i + n*j) = dF_i/du_j.
  const Eigen::MatrixXd& jacobian() const { return jac_; }

 private:
  Grid grid_;
  int ncomp_;
  Eigen::VectorXd diffusion_;
  Eigen::MatrixXd jac_;  // points x (n*n)
  std::optional<AlgebraElement> x_;
};

/// Au + F(u). Throws NumericalError if the result is non-finite.
Field apply_rhs(const Model& m, const Field& u);

/// v -> Av + F'(u)v.
LinearOperator linearize(const Model& m, const Field& u);

/// The comoving linearization L* : v -> Av - pi(X)v + F'(ustar)v.
LinearOperator comoving_operator(const Model& m, const AlgebraElement& x, const Field& ustar);

/// Models by name: "fhn" (a, eps, gamma, delta), "nagumo" (a),
/// "rotating_lw" (mu, beta, nu, q, d), "diffusion" (d, dim, components).
/// Missing parameters take the model's defaults; unknown names throw.
std::shared_ptr<Model> make_model(const std::string& name,
                                  const std::map<std::string, double>& params);

}  // namespace orbitrack

#endif  // ORBITRACK_MODEL_HPP
