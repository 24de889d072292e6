#include "orbitrack/guess.hpp"

#include <cmath>

#include "orbitrack/errors.hpp"
#include "orbitrack/sim.hpp"

namespace orbitrack {

Field nagumo_front_guess(const Grid& grid) {
  if (grid.dim != 1) throw StructuralError("nagumo_front_guess: 1D grids only");
  Field f(grid, 1);
  for (int i = 0; i < grid.points; ++i)
    f.values(i, 0) = 1.0 / (1.0 + std::exp(grid.coord(i) / std::sqrt(2.0)));
  return f;
}

Field fhn_pulse_guess(std::shared_ptr<Model> model, const Grid& grid, double t_relax,
                      double dt) {
  if (grid.dim != 1) throw StructuralError("fhn_pulse_guess: 1D grids only");
  if (model->components() != 2)
    throw StructuralError("fhn_pulse_guess: two-component models only");
  const int n = grid.points;
  Field u0(grid, 2);
  for (int i = 0; i < n; ++i) {
    double x = grid.coord(i);
    u0.values(i, 0) = (x > -10.0 && x < 5.0) ? 0.9 : 0.0;
    // refractory tail suppresses the leftward-running twin pulse
    u0.values(i, 1) = (x <= -10.0 && x > -40.0) ? 0.12 : 0.0;
  }
  SimConfig cfg;
  cfg.model = std::move(model);
  cfg.noise = NoiseSpec::off();
  cfg.dt = dt;
  cfg.t_end = t_relax;
  cfg.save_every = static_cast<int>(std::llround(t_relax / dt));
  cfg.blow_threshold = 50.0;
  cfg.keep_fields = true;
  auto traj = simulate(cfg, u0);
  Field uf = traj.fields.back();

  int imax = 0;
  double vmax = 0.0;
  for (int i = 0; i < n; ++i)
    if (uf.values(i, 0) > vmax) {
      vmax = uf.values(i, 0);
      imax = i;
    }
  if (vmax < 0.3)
    throw ConvergenceError("fhn_pulse_guess: excitation died during relaxation", vmax);

  int shift = imax - n / 2;
  Field centered(grid, 2);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 2; ++c)
      centered.values(i, c) = uf.values(((i + shift) % n + n) % n, c);
  return centered;
}

Field vortex_guess(const Model& model, const Grid& grid, double radius, double width) {
  if (grid.dim != 2) throw StructuralError("vortex_guess: 2D grids only");
  if (model.components() != 2) throw StructuralError("vortex_guess: two-component models only");
  const auto& prm = model.params();
  double mu = prm.count("mu") ? prm.at("mu") : 1.0;
  double beta = prm.count("beta") ? prm.at("beta") : 3.0;
  double disc = beta * beta - 4.0 * mu;
  double rho_plus = disc > 0.0 ? (beta + std::sqrt(disc)) / 2.0 : beta / 2.0;
  double amp = std::sqrt(rho_plus);

  const int n = grid.points;
  Field w(grid, 2);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) {
      double x = grid.coord(ix), y = grid.coord(iy);
      double r = std::sqrt(x * x + y * y), th = std::atan2(y, x);
      double a = amp * std::tanh(r / width) * 0.5 * (1.0 - std::tanh((r - radius) / width));
      w.values(iy * n + ix, 0) = a * std::cos(th);
      w.values(iy * n + ix, 1) = a * std::sin(th);
    }
  return w;
}

std::pair<Field, double> vortex_relaxed_guess(std::shared_ptr<Model> model, const Grid& grid,
                                              int coarse_points, double t_relax, double radius,
                                              double width) {
  if (grid.dim != 2) throw StructuralError("vortex_relaxed_guess: 2D grids only");
  Grid coarse(2, grid.extent, std::min(coarse_points, grid.points));
  Field w = vortex_guess(*model, coarse, radius, width);

  SimConfig cfg;
  cfg.model = model;
  cfg.dt = 2e-3;
  cfg.t_end = t_relax;
  cfg.save_every = static_cast<int>(std::llround(t_relax / cfg.dt)) - 500;
  cfg.blow_threshold = 100.0;
  auto tr = simulate(cfg, w);
  if (tr.blew_up || tr.fields.size() < 2)
    throw ConvergenceError("vortex_relaxed_guess: relaxation failed", 0.0);
  const Field& u1 = tr.fields[tr.fields.size() - 2];
  const Field& u2 = tr.fields.back();
  if (norm_sup(u2) < 0.2)
    throw ConvergenceError("vortex_relaxed_guess: the ring died during relaxation",
                           norm_sup(u2));
  double dt_snap = tr.times.back() - tr.times[tr.times.size() - 2];

  // gauge drift J u = (-v, u) gives the rotation speed of an m=1 vortex
  Field ju(coarse, 2);
  ju.values.col(0) = -u1.values.col(1);
  ju.values.col(1) = u1.values.col(0);
  double omega = -inner(u2 - u1, ju) / (dt_snap * inner(u1, u1));

  return {spectral_upsample(u2, grid.points), omega};
}

}  // namespace orbitrack
