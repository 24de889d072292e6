#include "orbitrack/sim.hpp"

#include <cmath>

#include "orbitrack/errors.hpp"
#include "orbitrack/rng.hpp"

namespace orbitrack {

Field sim_step(const Model& model, const SemiImplicitStepper& stepper, const NoiseSpec& noise,
               const Field& u, double t, std::mt19937_64& rng) {
  const double dt = stepper.dt();
  Field rhs = u + dt * model.apply_reaction(u);
  if (model.has_drift()) rhs += dt * model.drift(t, u);
  rhs += dt * stepper.rotation_term(u);
  if (noise.kind != NoiseKind::Off) rhs += sample_increment(noise, u, dt, rng);
  return stepper.solve_implicit(rhs);
}

Trajectory simulate(const SimConfig& cfg, const Field& u0, const DeviationTracker& tracker) {
  if (!cfg.model) throw StructuralError("simulate: missing model");
  if (!(cfg.dt > 0.0) || cfg.t_end < cfg.dt)
    throw StructuralError("simulate: need 0 < dt <= t_end");
  if (!(cfg.blow_threshold > 0.0)) throw StructuralError("simulate: bad blow threshold");
  if (cfg.frame == Frame::Comoving && !cfg.comoving_x)
    throw StructuralError("simulate: comoving frame needs the group velocity");

  std::optional<AlgebraElement> x;
  if (cfg.frame == Frame::Comoving) x = cfg.comoving_x;
  SemiImplicitStepper stepper(u0.grid, cfg.model->diffusion(), x, cfg.dt);
  if (!stepper.cfl_ok()) throw StructuralError("simulate: dt violates the advective CFL bound");

  std::mt19937_64 rng(cfg.seed);
  Trajectory traj;
  traj.seed = cfg.seed;

  const int n_steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  Field u = u0;
  auto record = [&](double t, const Field& f) {
    traj.times.push_back(t);
    if (cfg.keep_fields) traj.fields.push_back(f);
    if (tracker) {
      auto [dev, coords] = tracker(t, f);
      traj.deviation.push_back(dev);
      traj.phase_coords.push_back(coords);
    }
  };
  record(0.0, u);

  for (int k = 1; k <= n_steps; ++k) {
    double t_prev = (k - 1) * cfg.dt;
    u = sim_step(*cfg.model, stepper, cfg.noise, u, t_prev, rng);
    double t = k * cfg.dt;
    if (!u.all_finite() || norm_sup(u) > cfg.blow_threshold) {
      traj.blew_up = true;
      traj.blow_time = t;
      break;
    }
    if (k % cfg.save_every == 0 || k == n_steps) record(t, u);
  }
  return traj;
}

Trajectory linearized_solution(const Pattern& p, const Field& v0, const NoiseSpec& noise,
                               double t_end, double dt, int save_every, std::uint64_t seed) {
  if (!(dt > 0.0) || t_end < dt) throw StructuralError("linearized_solution: bad time step");
  const Grid& grid = p.ustar.grid;
  const int nc = p.ustar.components();
  // stationary-frame stepping along the numerically transported pattern:
  // dv = (A + F'(uhat(t))) v dt + noise(uhat(t)); uhat shares the scheme
  SemiImplicitStepper stepper(grid, p.model->diffusion(), std::nullopt, dt);

  std::mt19937_64 rng(seed);
  Trajectory traj;
  traj.seed = seed;

  const int n_steps = static_cast<int>(std::llround(t_end / dt));
  Field uhat = p.ustar;
  Field v = v0;
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.fields.push_back(v);
  };
  record(0.0);

  for (int k = 1; k <= n_steps; ++k) {
    Eigen::MatrixXd jac = p.model->jacobian_values(uhat);
    Field rhs = v;
    for (int i = 0; i < nc; ++i)
      for (int j = 0; j < nc; ++j)
        rhs.values.col(i).array() += dt * jac.col(i + nc * j).array() * v.values.col(j).array();
    if (noise.kind != NoiseKind::Off) rhs += sample_increment(noise, uhat, dt, rng);
    v = stepper.solve_implicit(rhs);
    uhat = stepper.solve_implicit(uhat + dt * p.model->apply_reaction(uhat));
    double t = k * dt;
    if (k % save_every == 0 || k == n_steps) record(t);
  }
  return traj;
}

std::vector<double> expansion_residual(const Trajectory& traj, const Trajectory& lin,
                                       const Pattern& p, const Trajectory* baseline) {
  if (traj.seed != lin.seed)
    throw StructuralError("expansion_residual: trajectories use different seeds");
  if (traj.times.size() != lin.times.size())
    throw StructuralError("expansion_residual: trajectories have different record counts");
  if (baseline && baseline->times.size() != traj.times.size())
    throw StructuralError("expansion_residual: baseline has different record count");
  std::vector<double> out;
  out.reserve(traj.times.size());
  for (size_t i = 0; i < traj.times.size(); ++i) {
    if (std::abs(traj.times[i] - lin.times[i]) > 1e-12)
      throw StructuralError("expansion_residual: trajectories have different times");
    Field uhat = baseline
                     ? baseline->fields[i]
                     : act(exp_group(AlgebraElement::from_coords(p.x.kind,
                                                                 traj.times[i] * p.x.coords)),
                           p.ustar);
    Field z = traj.fields[i] - uhat - lin.fields[i];
    out.push_back(norm_l2(z));
  }
  return out;
}

}  // namespace orbitrack
