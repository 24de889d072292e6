#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "orbitrack/errors.hpp"
#include "orbitrack/model.hpp"

using namespace orbitrack;

namespace {

constexpr double kPi = std::numbers::pi;

Field random_bandlimited(const Grid& g, int ncomp, int kmax, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Field f(g, ncomp);
  for (int c = 0; c < ncomp; ++c)
    for (int k = 1; k <= kmax; ++k) {
      double a = n(rng), b = n(rng);
      for (int i = 0; i < g.points; ++i) {
        double x = g.coord(i) * kPi / g.extent;
        f.values(i, c) += (a * std::sin(k * x) + b * std::cos(k * x)) / (k * k);
      }
    }
  return f;
}

}  // namespace

TEST_CASE("fhn rhs at rest and at a constant state") {
  auto m = make_model("fhn", {{"a", 0.25}, {"eps", 0.05}, {"gamma", 2.0}, {"delta", 0.01}});
  Grid g(1, 10.0, 64);
  Field zero(g, 2);
  CHECK(norm_l2(apply_rhs(*m, zero)) == 0.0);

  // u = (a, 0): f(a) = 0, so the first component vanishes and the second is eps*a
  Field ua(g, 2);
  ua.values.col(0).setConstant(0.25);
  Field rhs = apply_rhs(*m, ua);
  CHECK(rhs.values.col(0).cwiseAbs().maxCoeff() < 1e-14);
  for (int i = 0; i < g.points; ++i)
    CHECK(rhs.values(i, 1) == doctest::Approx(0.05 * 0.25).epsilon(1e-14));
}

TEST_CASE("pure diffusion on a Fourier mode decays with -k^2") {
  auto m = make_model("diffusion", {{"d", 1.0}});
  Grid g(1, kPi, 128);
  double k = 4.0;
  Field f(g, 1);
  for (int i = 0; i < g.points; ++i) f.values(i, 0) = std::sin(k * g.coord(i));
  Field rhs = apply_rhs(*m, f);
  for (int i = 0; i < g.points; i += 5)
    CHECK(rhs.values(i, 0) == doctest::Approx(-k * k * f.values(i, 0)).epsilon(1e-10));
}

TEST_CASE("fhn jacobian blocks") {
  double a = 0.1, eps = 0.01, gamma = 2.0;
  auto m = make_model("fhn", {{"a", a}, {"eps", eps}, {"gamma", gamma}});
  double u[2] = {0.0, 0.0};
  double j[4];
  m->reaction_jacobian(u, j);
  CHECK(j[0] == doctest::Approx(-a));  // f'(0) = -a
  CHECK(j[1] == doctest::Approx(eps));
  CHECK(j[2] == doctest::Approx(-1.0));
  CHECK(j[3] == doctest::Approx(-eps * gamma));
}

TEST_CASE("linearize matches directional finite differences") {
  auto m = make_model("fhn", {});
  Grid g(1, 10.0, 128);
  std::mt19937_64 rng(23);
  Field u = random_bandlimited(g, 2, 8, rng);
  Field v = random_bandlimited(g, 2, 8, rng);
  auto op = linearize(*m, u);
  double h = 1e-5;
  Field fd = (1.0 / (2 * h)) * (apply_rhs(*m, u + h * v) - apply_rhs(*m, u - h * v));
  Field lv = op.apply(v);
  CHECK(norm_l2(fd - lv) < 1e-6 * std::max(1.0, norm_l2(lv)));
}

TEST_CASE("linearity of the assembled operator") {
  auto m = make_model("rotating_lw", {});
  Grid g(2, 4.0, 16);
  std::mt19937_64 rng(29);
  std::normal_distribution<double> n(0, 1);
  Field u(g, 2);
  for (int p = 0; p < g.total_points(); ++p)
    for (int c = 0; c < 2; ++c) u.values(p, c) = 0.3 * n(rng);
  auto x = AlgebraElement::from_coords(GroupKind::SE2,
                                       (Eigen::VectorXd(3) << 0.0, 0.0, 0.9).finished());
  auto op = comoving_operator(*m, x, u);

  Field v1(g, 2), v2(g, 2);
  for (int p = 0; p < g.total_points(); ++p)
    for (int c = 0; c < 2; ++c) {
      v1.values(p, c) = n(rng);
      v2.values(p, c) = n(rng);
    }
  Field lhs = op.apply(2.0 * v1 - 3.0 * v2);
  Field rhs = 2.0 * op.apply(v1) - 3.0 * op.apply(v2);
  CHECK(norm_l2(lhs - rhs) < 1e-12 * std::max(1.0, norm_l2(rhs)));

  // assembled matrix agrees with the operator action
  Eigen::MatrixXd mat = op.assemble();
  Eigen::VectorXd diff = mat * v1.flat() - op.apply_flat(v1.flat());
  CHECK(diff.norm() < 1e-9 * std::max(1.0, op.apply_flat(v1.flat()).norm()));
}

TEST_CASE("comoving operator with X=0 reduces to the plain linearization") {
  auto m = make_model("fhn", {});
  Grid g(1, 8.0, 64);
  std::mt19937_64 rng(31);
  Field u = random_bandlimited(g, 2, 6, rng);
  Field v = random_bandlimited(g, 2, 6, rng);
  auto op0 = comoving_operator(*m, AlgebraElement::zero(GroupKind::Translation1D), u);
  auto op = linearize(*m, u);
  CHECK(norm_l2(op0.apply(v) - op.apply(v)) < 1e-14);
}

TEST_CASE("comoving operator includes the +c d/dx term") {
  auto m = make_model("fhn", {});
  Grid g(1, kPi, 128);
  double c = 0.7;
  auto x = AlgebraElement::from_coords(GroupKind::Translation1D, Eigen::VectorXd::Constant(1, c));
  Field u = Field::zero(g, 2);
  auto op = comoving_operator(*m, x, u);
  // on sin(kx) in component 0: Lap + c d/dx + F'(0)
  double k = 3.0;
  Field v(g, 2);
  for (int i = 0; i < g.points; ++i) v.values(i, 0) = std::sin(k * g.coord(i));
  Field lv = op.apply(v);
  for (int i = 0; i < g.points; i += 11) {
    double s = std::sin(k * g.coord(i)), co = std::cos(k * g.coord(i));
    double expect0 = -k * k * s + c * k * co + (-0.1) * s;  // f'(0) = -a = -0.1
    double expect1 = 0.01 * s;
    CHECK(lv.values(i, 0) == doctest::Approx(expect0).epsilon(1e-9));
    CHECK(lv.values(i, 1) == doctest::Approx(expect1).epsilon(1e-9));
  }
}

TEST_CASE("equivariance under whole-cell shifts") {
  auto m = make_model("fhn", {});
  Grid g(1, 6.0, 64);
  std::mt19937_64 rng(37);
  Field u = random_bandlimited(g, 2, 10, rng);
  auto shift = exp_group(AlgebraElement::from_coords(GroupKind::Translation1D,
                                                     Eigen::VectorXd::Constant(1, 5 * g.spacing())));
  Field lhs = apply_rhs(*m, act(shift, u));
  Field rhs = act(shift, apply_rhs(*m, u));
  CHECK(norm_l2(lhs - rhs) < 1e-12 * std::max(1.0, norm_l2(rhs)));
}

TEST_CASE("quadratic remainder of the reaction (Taylor control)") {
  auto m = make_model("fhn", {});
  Grid g(1, 8.0, 128);
  std::mt19937_64 rng(41);
  Field ustar = random_bandlimited(g, 2, 6, rng);
  Field r = random_bandlimited(g, 2, 6, rng);
  r *= 1.0 / norm_l2(r);
  auto op = linearize(*m, ustar);
  Field f0 = m->apply_reaction(ustar);

  std::vector<double> eps = {1e-1, 1e-2, 1e-3}, rem;
  for (double e : eps) {
    Field v = ustar + e * r;
    Field lin = op.apply(v - ustar) - scaled_laplacian(v - ustar, m->diffusion());
    Field res = m->apply_reaction(v) - f0 - lin;
    rem.push_back(norm_l2(res));
  }
  // fit exponent of ||remainder|| ~ C eps^p
  double p = std::log(rem[0] / rem[2]) / std::log(eps[0] / eps[2]);
  CHECK(p == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("unknown model name") {
  CHECK_THROWS_AS(make_model("bogus", {}), StructuralError);
}

TEST_CASE("rhs flags non-finite values with a location") {
  auto m = make_model("nagumo", {});
  Grid g(1, 4.0, 32);
  Field u(g, 1);
  u.values(5, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(apply_rhs(*m, u), NumericalError);
}
