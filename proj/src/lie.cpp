#include "orbitrack/lie.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "orbitrack/errors.hpp"

namespace orbitrack {

int space_dim(GroupKind kind) { return kind == GroupKind::Translation1D ? 1 : 2; }

int algebra_dim(GroupKind kind) { return kind == GroupKind::Translation1D ? 1 : 3; }

const std::vector<Eigen::MatrixXd>& algebra_basis(GroupKind kind) {
  static const std::vector<Eigen::MatrixXd> t1d = [] {
    Eigen::MatrixXd x1 = Eigen::MatrixXd::Zero(2, 2);
    x1(0, 1) = 1.0;
    return std::vector<Eigen::MatrixXd>{x1};
  }();
  static const std::vector<Eigen::MatrixXd> se2 = [] {
    Eigen::MatrixXd x1 = Eigen::MatrixXd::Zero(3, 3);
    Eigen::MatrixXd x2 = Eigen::MatrixXd::Zero(3, 3);
    Eigen::MatrixXd x3 = Eigen::MatrixXd::Zero(3, 3);
    x1(0, 2) = 1.0;
    x2(1, 2) = 1.0;
    x3(0, 1) = -1.0;
    x3(1, 0) = 1.0;
    return std::vector<Eigen::MatrixXd>{x1, x2, x3};
  }();
  return kind == GroupKind::Translation1D ? t1d : se2;
}

namespace {

void check_same_kind(GroupKind a, GroupKind b, const char* op) {
  if (a != b) throw StructuralError(std::string(op) + ": mixed group kinds");
}

Eigen::MatrixXd matrix_from_coords(GroupKind kind, const Eigen::VectorXd& c) {
  const auto& basis = algebra_basis(kind);
  const int n = space_dim(kind) + 1;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < static_cast<int>(basis.size()); ++i) m += c[i] * basis[i];
  return m;
}

// Frobenius projection onto the basis; the bases used here are orthogonal
// (not normalized), so a diagonal Gram suffices.
Eigen::VectorXd coords_from_matrix(GroupKind kind, const Eigen::MatrixXd& m) {
  const auto& basis = algebra_basis(kind);
  Eigen::VectorXd c(basis.size());
  for (int i = 0; i < static_cast<int>(basis.size()); ++i)
    c[i] = (m.array() * basis[i].array()).sum() / basis[i].squaredNorm();
  return c;
}

}  // namespace

AlgebraElement AlgebraElement::zero(GroupKind kind) {
  return from_coords(kind, Eigen::VectorXd::Zero(algebra_dim(kind)));
}

AlgebraElement AlgebraElement::from_coords(GroupKind kind, const Eigen::VectorXd& c) {
  if (c.size() != algebra_dim(kind))
    throw StructuralError("AlgebraElement: coordinate size does not match the basis");
  return AlgebraElement{kind, matrix_from_coords(kind, c), c};
}

AlgebraElement AlgebraElement::from_matrix(GroupKind kind, const Eigen::MatrixXd& m) {
  const int n = space_dim(kind) + 1;
  if (m.rows() != n || m.cols() != n)
    throw StructuralError("AlgebraElement: matrix has wrong dimensions");
  Eigen::VectorXd c = coords_from_matrix(kind, m);
  Eigen::MatrixXd rec = matrix_from_coords(kind, c);
  double scale = std::max(1.0, m.norm());
  if ((rec - m).norm() > 1e-12 * scale)
    throw StructuralError("AlgebraElement: matrix is not in the span of the basis");
  return AlgebraElement{kind, rec, c};
}

GroupElement GroupElement::identity(GroupKind kind) {
  const int n = space_dim(kind) + 1;
  return GroupElement{kind, Eigen::MatrixXd::Identity(n, n)};
}

GroupElement GroupElement::from_matrix(GroupKind kind, const Eigen::MatrixXd& m) {
  const int n = space_dim(kind) + 1;
  const int d = space_dim(kind);
  if (m.rows() != n || m.cols() != n)
    throw StructuralError("GroupElement: matrix has wrong dimensions");
  if (m.row(d).head(d).cwiseAbs().maxCoeff() != 0.0 || m(d, d) != 1.0)
    throw StructuralError("GroupElement: last row must be (0,...,0,1)");
  Eigen::MatrixXd r = m.topLeftCorner(d, d);
  if ((r.transpose() * r - Eigen::MatrixXd::Identity(d, d)).norm() > 1e-12 ||
      std::abs(r.determinant() - 1.0) > 1e-12)
    throw StructuralError("GroupElement: rotation block is not in SO(d)");
  return GroupElement{kind, m};
}

Eigen::VectorXd GroupElement::translation() const {
  const int d = space_dim(kind);
  return matrix.topRightCorner(d, 1);
}

double GroupElement::rotation_angle() const {
  if (kind == GroupKind::Translation1D) return 0.0;
  return std::atan2(matrix(1, 0), matrix(0, 0));
}

AlgebraElement bracket(const AlgebraElement& y, const AlgebraElement& z) {
  check_same_kind(y.kind, z.kind, "bracket");
  Eigen::MatrixXd m = y.matrix * z.matrix - z.matrix * y.matrix;
  return AlgebraElement::from_matrix(y.kind, m);
}

AdjointMap adjoint_map(const AlgebraElement& x) {
  const int m = algebra_dim(x.kind);
  Eigen::MatrixXd l(m, m);
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
    e[j] = 1.0;
    l.col(j) = bracket(AlgebraElement::from_coords(x.kind, e), x).coords;
  }
  return AdjointMap{x.kind, l};
}

AdjointMap exp_adjoint(const AdjointMap& l, double t) {
  if (!std::isfinite(t)) throw StructuralError("exp_adjoint: non-finite time");
  return AdjointMap{l.kind, expm(t * l.matrix)};
}

GroupElement exp_group(const AlgebraElement& y) {
  return GroupElement::from_matrix(y.kind, expm(y.matrix));
}

GroupElement compose(const GroupElement& g, const GroupElement& h) {
  check_same_kind(g.kind, h.kind, "compose");
  return GroupElement::from_matrix(g.kind, g.matrix * h.matrix);
}

GroupElement inverse(const GroupElement& g) {
  const int d = space_dim(g.kind);
  Eigen::MatrixXd r = g.matrix.topLeftCorner(d, d);
  Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(d + 1, d + 1);
  inv.topLeftCorner(d, d) = r.transpose();
  inv.topRightCorner(d, 1) = -r.transpose() * g.matrix.topRightCorner(d, 1);
  return GroupElement::from_matrix(g.kind, inv);
}

double group_distance(const GroupElement& g, const GroupElement& h) {
  check_same_kind(g.kind, h.kind, "group_distance");
  return (g.matrix - h.matrix).norm();
}

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  Eigen::MatrixXd b = a / std::pow(2.0, squarings);

  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = result;
  for (int k = 1; k <= 24; ++k) {
    term = (term * b) / static_cast<double>(k);
    result += term;
    if (term.norm() < 1e-18 * result.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

}  // namespace orbitrack
