#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "orbitrack/errors.hpp"
#include "orbitrack/lie.hpp"

using namespace orbitrack;

namespace {

AlgebraElement se2(double a, double b, double w) {
  return AlgebraElement::from_coords(GroupKind::SE2, (Eigen::VectorXd(3) << a, b, w).finished());
}

// Plain truncated-series exponential, independent of the scaling-and-squaring
// implementation under test.
Eigen::MatrixXd series_exp(const Eigen::MatrixXd& a, int terms) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = acc;
  for (int k = 1; k <= terms; ++k) {
    term = (term * a) / static_cast<double>(k);
    acc += term;
  }
  return acc;
}

GroupElement se2_group(double x1, double x2, double theta) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
  m(0, 0) = std::cos(theta);
  m(0, 1) = -std::sin(theta);
  m(1, 0) = std::sin(theta);
  m(1, 1) = std::cos(theta);
  m(0, 2) = x1;
  m(1, 2) = x2;
  return GroupElement::from_matrix(GroupKind::SE2, m);
}

}  // namespace

TEST_CASE("se(2) commutation relations") {
  auto x1 = se2(1, 0, 0), x2 = se2(0, 1, 0), x3 = se2(0, 0, 1);
  CHECK((bracket(x1, x2).coords).norm() == 0.0);
  CHECK((bracket(x1, x3).coords + x2.coords).norm() < 1e-15);
  CHECK((bracket(x2, x3).coords - x1.coords).norm() < 1e-15);
  // antisymmetry: [Y,Y] = 0
  auto y = se2(0.3, -1.2, 0.7);
  CHECK(bracket(y, y).coords.norm() == 0.0);
}

TEST_CASE("coords round-trip through the matrix representation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    auto y = se2(u(rng), u(rng), u(rng));
    auto back = AlgebraElement::from_matrix(GroupKind::SE2, y.matrix);
    CHECK((back.coords - y.coords).norm() < 1e-14);
  }
  CHECK_THROWS_AS(AlgebraElement::from_matrix(GroupKind::SE2, Eigen::MatrixXd::Identity(3, 3)),
                  StructuralError);
}

TEST_CASE("adjoint map of omega*X3 matches its closed form") {
  double omega = 1.7;
  auto l = adjoint_map(se2(0, 0, omega));
  Eigen::MatrixXd expected(3, 3);
  expected << 0, omega, 0, -omega, 0, 0, 0, 0, 0;
  CHECK((l.matrix - expected).norm() < 1e-14);

  // X = 0 and the commutative 1D case both give L = 0
  CHECK(adjoint_map(AlgebraElement::zero(GroupKind::SE2)).matrix.norm() == 0.0);
  auto c = AlgebraElement::from_coords(GroupKind::Translation1D,
                                       Eigen::VectorXd::Constant(1, 2.5));
  CHECK(adjoint_map(c).matrix.norm() == 0.0);
}

TEST_CASE("exp_adjoint reproduces the rotation block for all omega, t") {
  for (double omega : {0.5, 1.0, 2.0}) {
    auto l = adjoint_map(se2(0, 0, omega));
    for (double t : {0.0, 0.37, 1.0, 4.2, 10.0}) {
      auto e = exp_adjoint(l, t);
      Eigen::MatrixXd expected(3, 3);
      expected << std::cos(omega * t), std::sin(omega * t), 0, -std::sin(omega * t),
          std::cos(omega * t), 0, 0, 0, 1;
      CHECK((e.matrix - expected).norm() < 1e-12);
    }
  }
}

TEST_CASE("exp_adjoint group property and series oracle") {
  auto l = adjoint_map(se2(0.4, -0.3, 1.1));
  auto e1 = exp_adjoint(l, 0.8);
  auto e2 = exp_adjoint(l, 1.7);
  auto e3 = exp_adjoint(l, 2.5);
  CHECK((e1.matrix * e2.matrix - e3.matrix).norm() < 1e-12);

  // omega = pi/2, t = 1 against a 40-term series
  auto lrot = adjoint_map(se2(0, 0, std::numbers::pi / 2));
  Eigen::MatrixXd oracle = series_exp(lrot.matrix, 40);
  CHECK((exp_adjoint(lrot, 1.0).matrix - oracle).norm() < 1e-12);
  Eigen::MatrixXd quarter(3, 3);
  quarter << 0, 1, 0, -1, 0, 0, 0, 0, 1;
  CHECK((exp_adjoint(lrot, 1.0).matrix - quarter).norm() < 1e-12);
}

TEST_CASE("exp_group on translations and mixed elements") {
  // exp(t X1) is the translation T_{t,0,0}
  auto x1 = se2(1, 0, 0);
  auto g = exp_group(AlgebraElement::from_coords(GroupKind::SE2, 3.2 * x1.coords));
  CHECK((g.matrix - se2_group(3.2, 0, 0).matrix).norm() < 1e-14);

  CHECK(group_distance(exp_group(AlgebraElement::zero(GroupKind::SE2)),
                       GroupElement::identity(GroupKind::SE2)) == 0.0);

  auto y = se2(1, 0, std::numbers::pi / 2);
  CHECK((exp_group(y).matrix - series_exp(y.matrix, 40)).norm() < 1e-12);
}

TEST_CASE("compose and inverse") {
  auto t100 = se2_group(1, 0, 0), t010 = se2_group(0, 1, 0);
  CHECK(group_distance(compose(t100, t010), se2_group(1, 1, 0)) < 1e-14);

  auto rot = se2_group(0, 0, 0.7);
  CHECK(group_distance(inverse(rot), se2_group(0, 0, -0.7)) < 1e-14);

  auto quarter = se2_group(0, 0, std::numbers::pi / 2);
  auto mixed = compose(quarter, t100);
  CHECK((mixed.matrix - quarter.matrix * t100.matrix).norm() == 0.0);
  // rotating the translation (1,0) by pi/2 gives translation part (0,1)
  CHECK(std::abs(mixed.matrix(0, 2)) < 1e-15);
  CHECK(mixed.matrix(1, 2) == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = exp_group(se2(u(rng), u(rng), u(rng)));
    CHECK(group_distance(compose(g, inverse(g)), GroupElement::identity(GroupKind::SE2)) < 1e-12);
  }
}

TEST_CASE("jacobi identity on random combinations") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 25; ++trial) {
    auto x = se2(u(rng), u(rng), u(rng));
    auto y = se2(u(rng), u(rng), u(rng));
    auto z = se2(u(rng), u(rng), u(rng));
    Eigen::VectorXd sum = bracket(x, bracket(y, z)).coords +
                          bracket(y, bracket(z, x)).coords +
                          bracket(z, bracket(x, y)).coords;
    CHECK(sum.norm() < 1e-12);
  }
}

TEST_CASE("e^{tL} equals conjugation by the group flow") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  std::uniform_real_distribution<double> tdist(-5, 5);
  auto x = se2(0.2, -0.4, 0.9);
  auto l = adjoint_map(x);
  for (int trial = 0; trial < 15; ++trial) {
    auto y = se2(u(rng), u(rng), u(rng));
    double t = tdist(rng);
    Eigen::VectorXd lhs = expm(t * l.matrix) * y.coords;
    Eigen::MatrixXd conj = expm(-t * x.matrix) * y.matrix * expm(t * x.matrix);
    Eigen::VectorXd rhs = AlgebraElement::from_matrix(GroupKind::SE2, conj).coords;
    CHECK((lhs - rhs).norm() < 1e-10);
  }
}

TEST_CASE("one-parameter subgroup property of exp_group") {
  auto y = se2(0.7, 0.1, -1.3);
  for (auto [s, t] : {std::pair{0.5, 1.25}, {2.0, -0.75}, {-1.0, -2.0}}) {
    auto lhs = compose(exp_group(AlgebraElement::from_coords(GroupKind::SE2, s * y.coords)),
                       exp_group(AlgebraElement::from_coords(GroupKind::SE2, t * y.coords)));
    auto rhs = exp_group(AlgebraElement::from_coords(GroupKind::SE2, (s + t) * y.coords));
    CHECK(group_distance(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("structural errors on mixed kinds") {
  auto y1 = AlgebraElement::zero(GroupKind::Translation1D);
  auto y2 = AlgebraElement::zero(GroupKind::SE2);
  CHECK_THROWS_AS(bracket(y1, y2), StructuralError);
}
