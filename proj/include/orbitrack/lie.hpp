#ifndef ORBITRACK_LIE_HPP
#define ORBITRACK_LIE_HPP

#include <Eigen/Core>
#include <vector>

// Matrix Lie group/algebra arithmetic for the symmetry groups of the
// supported models: the 1D translation group and SE(2), both in homogeneous
// (d+1)x(d+1) form. Everything here is a pure function on immutable values.

namespace orbitrack {

enum class GroupKind { Translation1D, SE2 };

/// Spatial dimension d of the group's natural action.
int space_dim(GroupKind kind);

/// Dimension m of the Lie algebra (number of basis elements).
int algebra_dim(GroupKind kind);

/// Ordered basis (X_1, ..., X_m) as homogeneous (d+1)x(d+1) matrices.
const std::vector<Eigen::MatrixXd>& algebra_basis(GroupKind kind);

/// Element of the Lie algebra, kept both as a homogeneous matrix and as
/// coordinates in the fixed ordered basis. The two representations are
/// kept consistent at construction.
struct AlgebraElement {
  GroupKind kind;
  Eigen::MatrixXd matrix;  // (d+1)x(d+1)
  Eigen::VectorXd coords;  // size m

  static AlgebraElement zero(GroupKind kind);
  static AlgebraElement from_coords(GroupKind kind, const Eigen::VectorXd& c);
  /// Projects onto the basis; throws if the matrix is not in the span.
  static AlgebraElement from_matrix(GroupKind kind, const Eigen::MatrixXd& m);

  double norm() const { return coords.norm(); }  // Euclidean norm on coords
};

/// Group element as a homogeneous (d+1)x(d+1) matrix. For SE(d) the rotation
/// block is orthogonal with determinant one and the last row is (0,...,0,1).
struct GroupElement {
  GroupKind kind;
  Eigen::MatrixXd matrix;

  static GroupElement identity(GroupKind kind);
  static GroupElement from_matrix(GroupKind kind, const Eigen::MatrixXd& m);

  /// Translation part (length-d vector).
  Eigen::VectorXd translation() const;
  /// Rotation angle in radians (0 for Translation1D).
  double rotation_angle() const;
};

/// The map L = [.,X] on algebra coordinates, as an m x m matrix.
struct AdjointMap {
  GroupKind kind;
  Eigen::MatrixXd matrix;  // m x m
};

/// Lie bracket [Y,Z] = YZ - ZY.
AlgebraElement bracket(const AlgebraElement& y, const AlgebraElement& z);

/// L : Y -> [Y,X] in the fixed basis.
AdjointMap adjoint_map(const AlgebraElement& x);

/// e^{tL} via scaling-and-squaring.
AdjointMap exp_adjoint(const AdjointMap& l, double t);

/// Exponential map g -> G.
GroupElement exp_group(const AlgebraElement& y);

GroupElement compose(const GroupElement& g, const GroupElement& h);
GroupElement inverse(const GroupElement& g);

/// Frobenius distance between homogeneous matrices; the test metric near
/// the identity.
double group_distance(const GroupElement& g, const GroupElement& h);

/// Dense matrix exponential, scaling-and-squaring with truncated series
/// (squaring threshold ||A||_1 <= 0.5).
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

}  // namespace orbitrack

#endif  // ORBITRACK_LIE_HPP
