#include <doctest.h>

#include <cmath>
#include <numbers>

#include "orbitrack/errors.hpp"
#include "orbitrack/sim.hpp"
#include "test_helpers.hpp"

using namespace orbitrack;
using orbitrack::testing::fhn_pattern;
using orbitrack::testing::random_unit_field;

TEST_CASE("implicit diffusion step contracts a mode by exactly 1/(1+k^2 dt)") {
  auto m = make_model("diffusion", {{"d", 1.0}});
  Grid g(1, std::numbers::pi, 64);
  double k = 3.0, dt = 0.05;
  Field u(g, 1);
  for (int i = 0; i < g.points; ++i) u.values(i, 0) = std::sin(k * g.coord(i));
  SemiImplicitStepper stepper(g, m->diffusion(), std::nullopt, dt);
  std::mt19937_64 rng(1);
  Field u1 = sim_step(*m, stepper, NoiseSpec::off(), u, 0.0, rng);
  double factor = 1.0 / (1.0 + k * k * dt);
  for (int i = 0; i < g.points; i += 9)
    CHECK(u1.values(i, 0) == doctest::Approx(factor * u.values(i, 0)).epsilon(1e-12));
}

TEST_CASE("comoving frame holds the pattern stationary") {
  const Pattern& p = fhn_pattern();
  SimConfig cfg;
  cfg.model = p.model;
  cfg.frame = Frame::Comoving;
  cfg.comoving_x = p.x;
  cfg.dt = 1e-3;
  cfg.t_end = 10.0;
  cfg.save_every = 2000;
  auto traj = simulate(cfg, p.ustar);
  CHECK_FALSE(traj.blew_up);
  CHECK(norm_l2(traj.fields.back() - p.ustar) <= 1e-4);
}

TEST_CASE("stationary frame tracks the travelling pulse at first order in dt") {
  const Pattern& p = fhn_pattern();
  double t_end = 1.0;
  auto run = [&](double dt) {
    SimConfig cfg;
    cfg.model = p.model;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.save_every = static_cast<int>(std::llround(t_end / dt));
    auto traj = simulate(cfg, p.ustar);
    auto g = exp_group(AlgebraElement::from_coords(p.x.kind, t_end * p.x.coords));
    return norm_l2(traj.fields.back() - act(g, p.ustar));
  };
  double e1 = run(2e-3);
  double e2 = run(1e-3);
  CHECK(e2 == doctest::Approx(0.5 * e1).epsilon(0.2));  // first order
}

TEST_CASE("deterministic equivariance under whole-cell shifts") {
  const Pattern& p = fhn_pattern();
  const Grid& g = p.ustar.grid;
  auto shift = exp_group(AlgebraElement::from_coords(
      GroupKind::Translation1D, Eigen::VectorXd::Constant(1, 7 * g.spacing())));
  SimConfig cfg;
  cfg.model = p.model;
  cfg.dt = 1e-3;
  cfg.t_end = 0.5;
  cfg.save_every = 500;
  Field u0 = p.ustar + 0.01 * random_unit_field(g, 2, 3);
  auto a = simulate(cfg, act(shift, u0));
  auto b = simulate(cfg, u0);
  CHECK(norm_l2(a.fields.back() - act(shift, b.fields.back())) <= 1e-10);
}

TEST_CASE("frame consistency of the deterministic flow") {
  const Pattern& p = fhn_pattern();
  Field u0 = p.ustar + 0.02 * random_unit_field(p.ustar.grid, 2, 29);
  double t_end = 2.0;

  SimConfig stat;
  stat.model = p.model;
  stat.dt = 5e-4;
  stat.t_end = t_end;
  stat.save_every = 4000;
  auto traj_s = simulate(stat, u0);

  SimConfig com = stat;
  com.frame = Frame::Comoving;
  com.comoving_x = p.x;
  auto traj_c = simulate(com, u0);

  auto g_inv = exp_group(AlgebraElement::from_coords(p.x.kind, -t_end * p.x.coords));
  Field pulled = act(g_inv, traj_s.fields.back());
  CHECK(norm_l2(pulled - traj_c.fields.back()) <= 1e-3);
}

TEST_CASE("pathwise reproducibility is bit exact") {
  const Pattern& p = fhn_pattern();
  auto noise = NoiseSpec::additive_mode_family(p.ustar.grid, 2, 0, 6, 2.0, 0.5, 20.0, 0.05);
  SimConfig cfg;
  cfg.model = p.model;
  cfg.noise = noise;
  cfg.dt = 1e-3;
  cfg.t_end = 0.2;
  cfg.save_every = 200;
  cfg.seed = 987;
  auto a = simulate(cfg, p.ustar);
  auto b = simulate(cfg, p.ustar);
  CHECK((a.fields.back().values - b.fields.back().values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("blow-up terminates the trajectory without recording past the blow time") {
  auto m = make_model("nagumo", {{"a", 0.25}});
  Grid g(1, 5.0, 32);
  Field u0(g, 1);
  u0.values.setConstant(1.5);  // f(u) > 0 growth region is left quickly; force a tiny threshold
  SimConfig cfg;
  cfg.model = m;
  cfg.dt = 1e-2;
  cfg.t_end = 5.0;
  cfg.save_every = 10;
  cfg.blow_threshold = 1.2;
  auto traj = simulate(cfg, u0);
  CHECK(traj.blew_up);
  CHECK(traj.blow_time > 0.0);
  for (double t : traj.times) CHECK(t < traj.blow_time);
}

TEST_CASE("linearized solution: invariant direction and zero data") {
  const Pattern& p = fhn_pattern();
  Field t0 = p.center_tangents[0];  // pi(X)u* up to the speed factor
  auto traj = linearized_solution(p, t0, NoiseSpec::off(), 5.0, 1e-3, 5000, 0);
  // mapped to the stationary frame the center direction is transported by the
  // group motion; compare against the transported field
  auto g = exp_group(AlgebraElement::from_coords(p.x.kind, 5.0 * p.x.coords));
  CHECK(norm_l2(traj.fields.back() - act(g, t0)) <= 1e-3 * norm_l2(t0));

  auto zero = linearized_solution(p, Field::zero(p.ustar.grid, 2), NoiseSpec::off(), 1.0, 1e-3,
                                  1000, 0);
  CHECK(norm_l2(zero.fields.back()) == 0.0);
}

TEST_CASE("expansion remainder: zero at zero data, quadratic in eps") {
  const Pattern& p = fhn_pattern();
  double t_end = 2.0, dt = 1e-3;
  int save = 500;

  SimConfig stat;
  stat.model = p.model;
  stat.dt = dt;
  stat.t_end = t_end;
  stat.save_every = save;
  auto baseline = simulate(stat, p.ustar);

  Field r = project_stable(p, orbitrack::testing::random_bandlimited_unit(p.ustar.grid, 2, 41));
  r *= 1.0 / norm_l2(r);

  std::vector<double> eps = {1e-1, 3e-2, 1e-2}, zmax;
  for (double e : eps) {
    auto traj = simulate(stat, p.ustar + e * r);
    auto lin = linearized_solution(p, e * r, NoiseSpec::off(), t_end, dt, save, 0);
    auto zs = expansion_residual(traj, lin, p, &baseline);
    zmax.push_back(*std::max_element(zs.begin(), zs.end()));
  }
  double slope = std::log(zmax[0] / zmax[2]) / std::log(eps[0] / eps[2]);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.1));

  // zero perturbation: z is at scheme-noise level
  auto lin0 = linearized_solution(p, Field::zero(p.ustar.grid, 2), NoiseSpec::off(), t_end, dt,
                                  save, 0);
  auto z0 = expansion_residual(baseline, lin0, p, &baseline);
  CHECK(*std::max_element(z0.begin(), z0.end()) <= 1e-10);
}

TEST_CASE("expansion remainder validates seeds and timing") {
  const Pattern& p = fhn_pattern();
  SimConfig cfg;
  cfg.model = p.model;
  cfg.dt = 1e-2;
  cfg.t_end = 0.1;
  cfg.save_every = 10;
  cfg.seed = 1;
  auto a = simulate(cfg, p.ustar);
  cfg.seed = 2;
  auto b = simulate(cfg, p.ustar);
  CHECK_THROWS_AS(expansion_residual(a, b, p), StructuralError);
}

TEST_CASE("simulate validates its configuration") {
  auto m = make_model("diffusion", {});
  Grid g(1, 2.0, 16);
  SimConfig cfg;
  cfg.model = m;
  cfg.dt = -1.0;
  CHECK_THROWS_AS(simulate(cfg, Field::zero(g, 1)), StructuralError);
  cfg.dt = 1e-2;
  cfg.t_end = 1.0;
  cfg.frame = Frame::Comoving;  // missing comoving_x
  CHECK_THROWS_AS(simulate(cfg, Field::zero(g, 1)), StructuralError);
}
