// Acceptance suite: every stability-claim criterion at its stated tolerance,
// one PASS/FAIL line each. Patterns are computed once and shared.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "orbitrack/guess.hpp"
#include "orbitrack/io.hpp"
#include "orbitrack/mc.hpp"
#include "orbitrack/phase.hpp"
#include "orbitrack/rng.hpp"
#include "orbitrack/sim.hpp"
#include "orbitrack/stepping.hpp"

using namespace orbitrack;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(int criterion, bool pass, const std::string& detail, double seconds) {
  std::printf("CRITERION %2d: %s  [%6.1fs]  %s\n", criterion, pass ? "PASS" : "FAIL", seconds,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

Field random_unit(const Grid& g, int ncomp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Field f(g, ncomp);
  for (int c = 0; c < ncomp; ++c)
    for (int i = 0; i < g.total_points(); ++i) f.values(i, c) = std_normal(rng);
  f *= 1.0 / norm_l2(f);
  return f;
}

// band-limited directions survive fractional-shift resamplings (the grid
// cannot translate its Nyquist mode)
Field random_bandlimited(const Grid& g, int ncomp, std::uint64_t seed) {
  Field f = random_unit(g, ncomp, seed);
  const int cut = g.points / 8;
  f = apply_symbol(f, [&](double x1, double x2, double, int) {
    double k = std::sqrt(x1 * x1 + x2 * x2) * g.extent / std::numbers::pi;
    return std::complex<double>(k <= cut ? 1.0 : 0.0, 0.0);
  });
  f *= 1.0 / norm_l2(f);
  return f;
}

// grow the decay-envelope window until it certifies the detstab horizon
void ensure_decay_horizon(Pattern& p, double initial, double cap, DecayOptions opts) {
  double window = initial;
  for (int it = 0; it < 3; ++it) {
    estimate_decay(p, window, 50, opts);
    double t_req = 2.0 * std::log(std::max(p.constants->M3, 1.01)) / p.constants->a;
    if (t_req <= window || window >= cap) break;
    window = std::min(cap, 1.2 * t_req);
  }
}

AlgebraElement se2_basis(int j) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
  e[j] = 1.0;
  return AlgebraElement::from_coords(GroupKind::SE2, e);
}

// ---------------------------------------------------------------------------
// shared patterns
// ---------------------------------------------------------------------------

Pattern build_fhn_pattern() {
  auto m = make_model("fhn", {{"a", 0.1}, {"eps", 0.015}, {"gamma", 4.5}, {"delta", 0.01}});
  Grid g(1, 128.0, 1024);
  Field guess = fhn_pulse_guess(m, g, 120.0, 4e-3);
  Pattern p = solve_profile(
      m, guess,
      AlgebraElement::from_coords(GroupKind::Translation1D, Eigen::VectorXd::Constant(1, 0.37)));
  spectral_decomposition(p);
  DecayOptions dopts;
  dopts.dt = 0.025;
  dopts.samples = 8;
  ensure_decay_horizon(p, 300.0, 600.0, dopts);
  return p;
}

Pattern build_rotating_pattern() {
  auto m = make_model("rotating_lw",
                      {{"mu", 1.05}, {"beta", 3.0}, {"nu", 1.0}, {"q", 0.9}, {"d", 1.0}});
  Grid g(2, 30.0, 256);
  auto [u0, omega0] = vortex_relaxed_guess(m, g, 128, 120.0, 2.8, 1.0);
  Eigen::VectorXd xc = Eigen::VectorXd::Zero(3);
  xc[2] = omega0;
  Pattern p = solve_profile(m, u0, AlgebraElement::from_coords(GroupKind::SE2, xc));
  spectral_decomposition(p);
  return p;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

void criterion_1_lie() {
  Timer t;
  bool pass = true;
  std::ostringstream note;

  auto x1 = se2_basis(0), x2 = se2_basis(1), x3 = se2_basis(2);
  // commutation table of the homogeneous matrices, exact
  pass &= bracket(x1, x2).coords.norm() == 0.0;
  pass &= (bracket(x1, x3).coords + x2.coords).norm() == 0.0;
  pass &= (bracket(x2, x3).coords - x1.coords).norm() == 0.0;

  double worst = 0.0;
  for (double omega : {0.5, 1.0, 2.0}) {
    Eigen::VectorXd xc = Eigen::VectorXd::Zero(3);
    xc[2] = omega;
    auto l = adjoint_map(AlgebraElement::from_coords(GroupKind::SE2, xc));
    for (double tt = 0.0; tt <= 10.0 + 1e-12; tt += 0.5) {
      Eigen::MatrixXd expect(3, 3);
      expect << std::cos(omega * tt), std::sin(omega * tt), 0.0, -std::sin(omega * tt),
          std::cos(omega * tt), 0.0, 0.0, 0.0, 1.0;
      worst = std::max(worst, (exp_adjoint(l, tt).matrix - expect).norm());
    }
  }
  pass &= worst <= 1e-12;
  note << "commutation table exact, e^{tL} error " << worst;
  report(1, pass, note.str(), t.seconds());
}

void criterion_2_center_propagation(const Pattern& rot, const Pattern& fhn) {
  Timer t;
  bool pass = true;
  std::ostringstream note;

  {
    auto op = rot.comoving();
    double dt = 4e-3;  // CFL bound is 5.3e-3 at this omega and box
    SemiImplicitStepper st(rot.ustar.grid, rot.model->diffusion(), rot.x, dt);
    double worst = 0.0;
    for (int j = 0; j < 3; ++j) {
      Field v = rot.center_tangents[j];
      for (int k = 0; k < static_cast<int>(5.0 / dt); ++k) v = st.heun(op, v);
      Eigen::VectorXd yt = exp_adjoint(adjoint_map(rot.x), 5.0).matrix * se2_basis(j).coords;
      Field expect = Field::zero(rot.ustar.grid, 2);
      for (int i = 0; i < 3; ++i) expect += yt[i] * rot.center_tangents[i];
      worst = std::max(worst, norm_l2(v - expect) / norm_l2(expect));
    }
    pass &= worst <= 1e-3;
    note << "rotating-wave propagation err " << worst;
  }
  {
    // pi(X)u* is invariant under the comoving linear flow
    auto op = fhn.comoving();
    double dt = 5e-3;
    SemiImplicitStepper st(fhn.ustar.grid, fhn.model->diffusion(), fhn.x, dt);
    Field v = infinitesimal_act(fhn.x, fhn.ustar);
    Field v0 = v;
    for (int k = 0; k < static_cast<int>(5.0 / dt); ++k) v = st.heun(op, v);
    double rel = norm_l2(v - v0) / norm_l2(v0);
    pass &= rel <= 1e-4;
    note << "; pulse invariance err " << rel;
  }
  report(2, pass, note.str(), t.seconds());
}

void criterion_3_front() {
  Timer t;
  double a = 0.25;
  auto m = make_model("nagumo", {{"a", a}});
  Grid g(1, 30.0, 8192);
  Pattern p = solve_front_profile(m, nagumo_front_guess(g), 0.3);
  double c_exact = std::sqrt(2.0) * (0.5 - a);
  double c_err = std::abs(p.x.coords[0] - c_exact);
  double sup = 0.0;
  for (int i = 0; i < g.points; ++i)
    sup = std::max(sup, std::abs(p.ustar.values(i, 0) -
                                 1.0 / (1.0 + std::exp(g.coord(i) / std::sqrt(2.0)))));
  std::ostringstream note;
  note << "speed err " << c_err << ", profile sup err " << sup;
  report(3, c_err <= 1e-6 && sup <= 1e-6, note.str(), t.seconds());
}

void criterion_4_spectral(const Pattern& fhn, const Pattern& rot) {
  Timer t;
  bool pass = true;
  std::ostringstream note;

  double l0 = std::abs(fhn.center_eigenvalues[0]);
  double cos_sim = std::cos(fhn.max_principal_angle);
  pass &= l0 <= 1e-6;
  pass &= cos_sim >= 0.999;
  note << "pulse |lambda_0| " << l0 << ", eigvec cos " << cos_sim;

  double omega = rot.x.coords[2];
  double tol = 1e-4 * (1.0 + std::abs(omega));
  double e0 = std::abs(rot.center_eigenvalues[0]);
  double e1 = std::abs(rot.center_eigenvalues[1] - std::complex<double>(0.0, omega));
  double e2 = std::abs(rot.center_eigenvalues[2] - std::complex<double>(0.0, -omega));
  pass &= e0 <= tol && e1 <= tol && e2 <= tol;
  note << "; triple errs {" << e0 << ", " << e1 << ", " << e2 << "} tol " << tol;

  double biorth = 0.0;
  for (const Pattern* p : {&fhn, &rot})
    for (int i = 0; i < p->group_dim(); ++i)
      for (int j = 0; j < p->group_dim(); ++j)
        biorth = std::max(biorth, std::abs(inner(p->adjoint_functions[i], p->center_tangents[j]) -
                                           (i == j ? 1.0 : 0.0)));
  pass &= biorth <= 1e-8;
  note << "; biorthogonality " << biorth;
  report(4, pass, note.str(), t.seconds());
}

void criterion_5_detstab(const Pattern& fhn) {
  Timer t;
  bool pass = true;
  std::ostringstream note;

  double T = std::min(2.0 * std::log(std::max(fhn.constants->M3, 1.01)) / fhn.constants->a,
                      fhn.constants->fit_t1);
  DetstabOptions opts;
  opts.dt = 2e-3;
  auto rep = detstab_experiment(fhn, {1e-1, 3e-2, 1e-2, 3e-3}, T, opts);
  // the theorem's bound holds below an empirical eps'; find it and require it
  // to cover the small end of the grid
  double bound = rep.decay_floor + 0.1;
  double eps_prime = 0.0;
  for (size_t i = 0; i < rep.eps_list.size(); ++i)
    if (rep.ratios[i] <= bound) eps_prime = std::max(eps_prime, rep.eps_list[i]);
  pass &= eps_prime >= 1e-2;
  pass &= std::abs(rep.excess_exponent - 2.0) <= 0.2;
  note << "T " << T << ", floor+delta " << bound << ", eps' " << eps_prime
       << ", excess exponent " << rep.excess_exponent;

  // Taylor estimate on the group action
  std::vector<double> ys = {1e-1, 1e-2, 1e-3}, errs;
  for (double s : ys) {
    auto y = AlgebraElement::from_coords(fhn.x.kind, Eigen::VectorXd::Constant(1, s));
    Field diff = act(exp_group(y), fhn.ustar) - fhn.ustar - infinitesimal_act(y, fhn.ustar);
    errs.push_back(norm_l2(diff));
  }
  double taylor = std::log(errs[0] / errs[2]) / std::log(ys[0] / ys[2]);
  pass &= std::abs(taylor - 2.0) <= 0.1;
  note << "; taylor exponent " << taylor;
  report(5, pass, note.str(), t.seconds());
}

void criterion_6_expansion(const Pattern& p) {
  Timer t;
  bool pass = true;
  std::ostringstream note;
  const Grid& g = p.ustar.grid;
  double t_end = 2.0, dt = 1e-3;
  int save = 500;

  SimConfig stat;
  stat.model = p.model;
  stat.dt = dt;
  stat.t_end = t_end;
  stat.save_every = save;
  auto baseline = simulate(stat, p.ustar);

  {
    Field r = project_stable(p, random_bandlimited(g, 2, 41));
    r *= 1.0 / norm_l2(r);
    std::vector<double> eps = {1e-1, 3e-2, 1e-2}, zmax;
    for (double e : eps) {
      auto traj = simulate(stat, p.ustar + e * r);
      auto lin = linearized_solution(p, e * r, NoiseSpec::off(), t_end, dt, save, 0);
      auto zs = expansion_residual(traj, lin, p, &baseline);
      zmax.push_back(*std::max_element(zs.begin(), zs.end()));
    }
    double slope = std::log(zmax[0] / zmax[2]) / std::log(eps[0] / eps[2]);
    pass &= std::abs(slope - 2.0) <= 0.2;
    note << "eps exponent " << slope;
  }

  {
    auto noise = NoiseSpec::additive_mode_family(g, 2, 0, 8, 2.0, 1.0, 30.0, 1.0);
    std::vector<double> sigmas = {1e-2, 3e-3, 1e-3}, medians;
    const int n_paths = 100;
    for (double s : sigmas) {
      NoiseSpec ns = noise;
      ns.sigma = s;
      std::vector<double> zm(n_paths);
      for (int path = 0; path < n_paths; ++path) {
        SimConfig cfg = stat;
        cfg.noise = ns;
        cfg.seed = 1000 + path;
        auto traj = simulate(cfg, p.ustar);
        auto lin = linearized_solution(p, Field::zero(g, 2), ns, t_end, dt, save, 1000 + path);
        auto zs = expansion_residual(traj, lin, p, &baseline);
        zm[path] = *std::max_element(zs.begin(), zs.end());
      }
      std::nth_element(zm.begin(), zm.begin() + n_paths / 2, zm.end());
      medians.push_back(zm[n_paths / 2]);
    }
    double slope = std::log(medians[0] / medians[2]) / std::log(sigmas[0] / sigmas[2]);
    pass &= std::abs(slope - 2.0) <= 0.3;
    note << "; sigma exponent " << slope << " (median over " << n_paths << " paths)";
  }
  report(6, pass, note.str(), t.seconds());
}

void criterion_7_hs() {
  Timer t;
  Grid g(1, 6.0, 256);
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Field u(g, 1), phi(g, 1);
    for (int i = 0; i < g.points; ++i) {
      u.values(i, 0) = std_normal(rng);
      phi.values(i, 0) = std_normal(rng);
    }
    double hs = hs_norm_G(u, phi);
    worst = std::max(worst, std::abs(hs - norm_l2(u) * norm_l2(phi)) /
                                (norm_l2(u) * norm_l2(phi)));
  }
  std::ostringstream note;
  note << "max relative defect " << worst << " over 100 pairs";
  report(7, worst <= 1e-10, note.str(), t.seconds());
}

void criterion_8_tails() {
  Timer t;
  bool pass = true;
  std::ostringstream note;
  TailCheckOptions opts;
  opts.dt = 1e-4;
  opts.threads = 2;

  int total_violations = 0;
  for (double rate : {0.0, 1.0}) {
    double T = rate == 0.0 ? 1.0 : 4.0;
    double K = opts.calibration * std::sqrt(T);
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(5.0 * K * i / 19.0);
    auto rep = stochconv_tail_check(rate, T, 10000, grid, 4242, opts);
    total_violations += rep.violations;
  }
  pass &= total_violations == 0;
  note << "violations " << total_violations;

  std::vector<double> bm_grid = {3.0};
  auto bm = stochconv_tail_check(0.0, 1.0, 10000, bm_grid, 777, opts);
  double exact = 2.0 * std::erfc(3.0 / std::sqrt(2.0));  // 2 P(|N| > 3)
  double se = std::sqrt(exact * (1.0 - exact) / 10000.0);
  double dev = std::abs(bm.empirical_survival[0] - exact);
  pass &= dev <= 3.0 * se + 2e-4;  // small allowance for the sup discretization bias
  note << "; brownian sup P " << bm.empirical_survival[0] << " vs reflection " << exact
       << " (3se " << 3.0 * se << ")";
  report(8, pass, note.str(), t.seconds());
}

void criterion_9_escape(const Pattern& p) {
  Timer t;
  bool pass = true;
  std::ostringstream note;
  const Grid& g = p.ustar.grid;
  auto noise = NoiseSpec::additive_mode_family(g, 2, 0, 8, 2.0, 1.0, 30.0, 1.0);

  const double eps = 0.30;
  const double T = 15.0;
  const int n_paths = 200;
  EscapeOptions opts;
  opts.dt = 2e-3;
  opts.save_every = 100;
  opts.threads = 2;

  auto zero = escape_probability(p, noise, eps, 0.0, T, 8, 70, opts);
  pass &= zero.n_escapes == 0;
  note << "sigma=0 escapes " << zero.n_escapes;

  std::vector<double> sigmas = {eps / 8.0, eps / 4.0, eps / 2.0, eps};
  std::vector<EscapeReport> reps;
  for (double s : sigmas) reps.push_back(escape_probability(p, noise, eps, s, T, n_paths, 70, opts));

  // monotone after interval overlap: flag only strictly disjoint inversions
  bool monotone = true;
  for (size_t i = 1; i < reps.size(); ++i)
    if (reps[i].wilson_hi < reps[i - 1].wilson_lo) monotone = false;
  pass &= monotone;
  note << "; fractions";
  for (auto& r : reps) note << " " << r.escape_fraction;

  // log-fraction vs eps^2/sigma^2 on estimable points
  std::vector<double> xs, ys;
  for (size_t i = 0; i < reps.size(); ++i)
    if (reps[i].n_escapes > 0 && reps[i].n_escapes < reps[i].n_paths) {
      xs.push_back(eps * eps / (sigmas[i] * sigmas[i]));
      ys.push_back(std::log(reps[i].escape_fraction));
    }
  if (xs.size() >= 3) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, n = static_cast<double>(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    pass &= slope < 0.0;
    note << "; slope " << slope << " over " << xs.size() << " points";
  } else {
    pass = false;
    note << "; too few estimable fractions (" << xs.size() << ")";
  }
  report(9, pass, note.str(), t.seconds());
}

void criterion_10_reproducibility(const Pattern& p) {
  Timer t;
  const Grid& g = p.ustar.grid;
  auto noise = NoiseSpec::additive_mode_family(g, 2, 0, 8, 2.0, 1.0, 30.0, 0.05);
  EscapeOptions opts;
  opts.dt = 2e-3;
  opts.save_every = 100;
  opts.threads = 2;

  auto csv_of = [&](const EscapeReport& rep) {
    std::ostringstream csv;
    csv << "sigma,fraction,lo,hi\n"
        << format_g17(rep.sigma) << ',' << format_g17(rep.escape_fraction) << ','
        << format_g17(rep.wilson_lo) << ',' << format_g17(rep.wilson_hi) << "\n";
    for (double ft : rep.first_escape_times) csv << format_g17(ft) << "\n";
    return csv.str();
  };
  auto r1 = escape_probability(p, noise, 0.3, 0.05, 3.0, 16, 123, opts);
  auto r2 = escape_probability(p, noise, 0.3, 0.05, 3.0, 16, 123, opts);
  bool pass = csv_of(r1) == csv_of(r2);

  TailCheckOptions topts;
  topts.dt = 1e-3;
  topts.threads = 2;
  std::vector<double> grid = {0.5, 1.0, 1.5};
  auto t1 = stochconv_tail_check(1.0, 1.0, 2000, grid, 9, topts);
  auto t2 = stochconv_tail_check(1.0, 1.0, 2000, grid, 9, topts);
  for (size_t i = 0; i < grid.size(); ++i)
    pass &= format_g17(t1.empirical_survival[i]) == format_g17(t2.empirical_survival[i]);

  report(10, pass, "byte-identical reruns (escape + tail reports)", t.seconds());
}

}  // namespace

int main() {
  std::printf("== acceptance suite ==\n");
  Timer total;

  criterion_1_lie();
  criterion_3_front();
  criterion_7_hs();
  criterion_8_tails();

  Timer setup;
  std::printf("-- computing the travelling-pulse pattern...\n");
  std::fflush(stdout);
  Pattern fhn = build_fhn_pattern();
  std::printf("-- pulse: c %.6f, gap %.4f, M %.3f, a %.5f  [%.0fs]\n", fhn.x.coords[0],
              fhn.spectral_gap, fhn.constants->M, fhn.constants->a, setup.seconds());
  Timer setup2;
  std::printf("-- computing the rotating-wave pattern...\n");
  std::fflush(stdout);
  Pattern rot = build_rotating_pattern();
  std::printf("-- rotating wave: omega %.6f, gap %.4f  [%.0fs]\n", rot.x.coords[2],
              rot.spectral_gap, setup2.seconds());
  std::fflush(stdout);

  criterion_2_center_propagation(rot, fhn);
  criterion_4_spectral(fhn, rot);
  criterion_5_detstab(fhn);
  criterion_6_expansion(fhn);
  criterion_9_escape(fhn);
  criterion_10_reproducibility(fhn);

  std::printf("== %s (total %.0fs) ==\n", g_failures == 0 ? "ALL CRITERIA PASS" : "FAILURES",
              total.seconds());
  return g_failures == 0 ? 0 : 1;
}
