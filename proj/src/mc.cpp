#include "orbitrack/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "orbitrack/errors.hpp"
#include "orbitrack/phase.hpp"
#include "orbitrack/rng.hpp"
#include "orbitrack/sim.hpp"

namespace orbitrack {

namespace {

constexpr double kZ95 = 1.959963984540054;

Field random_unit_field(const Grid& grid, int ncomp, std::mt19937_64& rng) {
  Field f(grid, ncomp);
  for (int c = 0; c < ncomp; ++c)
    for (int i = 0; i < grid.total_points(); ++i) f.values(i, c) = std_normal(rng);
  f *= 1.0 / norm_l2(f);
  return f;
}

// runs fn(path_index) over a small worker pool; results land in caller arrays
void parallel_paths(int n_paths, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1) {
    for (int i = 0; i < n_paths; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n_paths; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

std::pair<double, double> wilson_interval(int successes, int n) {
  if (n <= 0) throw StructuralError("wilson_interval: n must be positive");
  double phat = static_cast<double>(successes) / n;
  double z2 = kZ95 * kZ95;
  double denom = 1.0 + z2 / n;
  double center = (phat + z2 / (2.0 * n)) / denom;
  double half = kZ95 * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

double subgaussian_bound(double K, double lambda) {
  if (!(K > 0.0)) throw StructuralError("subgaussian_bound: K must be positive");
  if (!(lambda >= 0.0)) throw StructuralError("subgaussian_bound: lambda must be nonnegative");
  const double e = std::exp(1.0);
  return e * std::exp(-lambda * lambda / (2.0 * e * K * K));
}

// ---------------------------------------------------------------------------
// Deterministic scaling
// ---------------------------------------------------------------------------

DetstabReport detstab_experiment(const Pattern& p, const std::vector<double>& eps_list, double T,
                                 const DetstabOptions& opts) {
  if (!p.decomposed || !p.constants)
    throw StructuralError("detstab_experiment: pattern needs decomposition and constants");
  if (eps_list.empty()) throw StructuralError("detstab_experiment: empty eps list");

  std::mt19937_64 rng(opts.seed);
  Field r = random_unit_field(p.ustar.grid, p.ustar.components(), rng);

  DetstabReport rep;
  rep.eps_list = eps_list;
  rep.decay_floor = p.constants->M3 * std::exp(-p.constants->a * T);

  for (double eps : eps_list) {
    if (eps == 0.0) {
      rep.residuals.push_back(0.0);
      rep.ratios.push_back(0.0);
      continue;
    }
    SimConfig cfg;
    cfg.model = p.model;
    cfg.noise = NoiseSpec::off();
    cfg.frame = Frame::Comoving;
    cfg.comoving_x = p.x;
    cfg.dt = opts.dt;
    cfg.t_end = T;
    cfg.save_every = std::max(1, static_cast<int>(std::llround(T / opts.dt)));
    cfg.keep_fields = true;
    auto traj = simulate(cfg, p.ustar + eps * r);
    const Field& ubar = traj.fields.back();

    auto est = predicted_phase(p, eps * r, T);
    // pull the predicted phase into the comoving frame: the residual norm is
    // unchanged because the action is an isometry
    auto g_shift = compose(inverse(exp_group(AlgebraElement::from_coords(p.x.kind,
                                                                          T * p.x.coords))),
                           est.gamma);
    double res = norm_l2(ubar - act(g_shift, p.ustar));
    rep.residuals.push_back(res);
    rep.ratios.push_back(res / eps);
  }

  // fit R(eps) = alpha eps + beta eps^q by scanning q
  double best_q = 0.0, best_err = std::numeric_limits<double>::infinity();
  double best_alpha = 0.0, best_beta = 0.0;
  for (double q = 1.3; q <= 3.0 + 1e-9; q += 0.01) {
    // linear least squares in (alpha, beta)
    double s11 = 0, s12 = 0, s22 = 0, b1 = 0, b2 = 0;
    for (size_t i = 0; i < eps_list.size(); ++i) {
      if (eps_list[i] == 0.0) continue;
      double x1 = eps_list[i], x2 = std::pow(eps_list[i], q);
      s11 += x1 * x1;
      s12 += x1 * x2;
      s22 += x2 * x2;
      b1 += x1 * rep.residuals[i];
      b2 += x2 * rep.residuals[i];
    }
    double det = s11 * s22 - s12 * s12;
    if (std::abs(det) < 1e-300) continue;
    double alpha = (b1 * s22 - b2 * s12) / det;
    double beta = (s11 * b2 - s12 * b1) / det;
    double err = 0.0;
    for (size_t i = 0; i < eps_list.size(); ++i) {
      if (eps_list[i] == 0.0) continue;
      double fit = alpha * eps_list[i] + beta * std::pow(eps_list[i], q);
      double rel = (fit - rep.residuals[i]) / rep.residuals[i];
      err += rel * rel;
    }
    if (err < best_err && beta > 0.0) {
      best_err = err;
      best_q = q;
      best_alpha = alpha;
      best_beta = beta;
    }
  }
  rep.linear_coeff = best_alpha;
  rep.excess_coeff = best_beta;
  rep.excess_exponent = best_q;
  return rep;
}

// ---------------------------------------------------------------------------
// Escape statistics
// ---------------------------------------------------------------------------

namespace {

struct PathOutcome {
  bool escaped = false;
  bool blew_up = false;
  double escape_time = std::numeric_limits<double>::infinity();
};

EscapeReport aggregate(double eps, double sigma, double T, int n_paths,
                       const std::vector<PathOutcome>& outcomes) {
  EscapeReport rep;
  rep.epsilon = eps;
  rep.sigma = sigma;
  rep.horizon = T;
  rep.n_paths = n_paths;
  int blowups = 0;
  for (const auto& o : outcomes) {
    if (o.escaped) ++rep.n_escapes;
    if (o.blew_up) ++blowups;
    rep.first_escape_times.push_back(o.escape_time);
  }
  rep.escape_fraction = static_cast<double>(rep.n_escapes) / n_paths;
  std::tie(rep.wilson_lo, rep.wilson_hi) = wilson_interval(rep.n_escapes, n_paths);
  rep.degenerate = blowups == n_paths;
  return rep;
}

}  // namespace

EscapeReport escape_probability(const Pattern& p, const NoiseSpec& noise, double eps, double sigma,
                                double T, int n_paths, std::uint64_t seed,
                                const EscapeOptions& opts) {
  if (!p.decomposed || !p.constants)
    throw StructuralError("escape_probability: pattern needs decomposition and constants");
  if (!(sigma <= eps))
    throw StructuralError("escape_probability: requires sigma <= eps");
  if (n_paths <= 0) throw StructuralError("escape_probability: n_paths must be positive");

  NoiseSpec scaled = noise;
  scaled.sigma = sigma;
  const double t_rec = opts.recursion_interval > 0.0
                           ? opts.recursion_interval
                           : std::log(2.0 * p.constants->M3) / p.constants->a;

  std::vector<PathOutcome> outcomes(n_paths);
  parallel_paths(n_paths, opts.threads, [&](int path) {
    auto rng = path_rng(seed, path);
    SemiImplicitStepper stepper(p.ustar.grid, p.model->diffusion(), std::nullopt, opts.dt);
    Field u = p.ustar;  // v0 = 0
    GroupElement gamma_track = GroupElement::identity(p.x.kind);
    double t = 0.0, t_last_rec = 0.0;
    PathOutcome& out = outcomes[path];
    const int n_steps = static_cast<int>(std::llround(T / opts.dt));
    for (int k = 1; k <= n_steps; ++k) {
      u = sim_step(*p.model, stepper, sigma > 0 ? scaled : NoiseSpec::off(), u, t, rng);
      t = k * opts.dt;
      if (!u.all_finite() || norm_sup(u) > opts.blow_threshold) {
        out.blew_up = true;
        out.escaped = true;  // leaving every neighborhood counts as escape
        out.escape_time = t;
        break;
      }
      if (k % opts.save_every != 0 && k != n_steps) continue;

      // advance the tracked phase by the interval recursion
      if (t - t_last_rec >= t_rec) {
        Field pulled = act(inverse(gamma_track), u);
        Field w = pulled - p.ustar;
        AdjointMap l = adjoint_map(p.x);
        double dt_rec = t - t_last_rec;
        Eigen::VectorXd coords = exp_adjoint(l, dt_rec).matrix * project_center(p, w).coords;
        gamma_track = compose(
            compose(gamma_track,
                    exp_group(AlgebraElement::from_coords(p.x.kind, dt_rec * p.x.coords))),
            exp_group(AlgebraElement::from_coords(p.x.kind, coords)));
        t_last_rec = t;
      }
      // seed the minimizer with the tracked phase advanced to the current time
      GroupElement seed_gamma = compose(
          gamma_track,
          exp_group(AlgebraElement::from_coords(p.x.kind, (t - t_last_rec) * p.x.coords)));
      auto nearest = nearest_phase(p, u, seed_gamma);
      if (nearest.residual >= eps) {
        out.escaped = true;
        out.escape_time = t;
        break;
      }
    }
  });
  return aggregate(eps, sigma, T, n_paths, outcomes);
}

EscapeReport shortterm_experiment(const Pattern& p, const NoiseSpec& noise, double eps,
                                  double sigma, double alpha, double T, int n_paths,
                                  std::uint64_t seed, const EscapeOptions& opts) {
  if (!p.decomposed || !p.constants)
    throw StructuralError("shortterm_experiment: pattern needs decomposition and constants");
  if (!(sigma <= eps)) throw StructuralError("shortterm_experiment: requires sigma <= eps");

  NoiseSpec scaled = noise;
  scaled.sigma = sigma;
  const double m3 = p.constants->M3;
  const double a_rate = p.constants->a;

  std::vector<PathOutcome> outcomes(n_paths);
  parallel_paths(n_paths, opts.threads, [&](int path) {
    auto rng = path_rng(seed, path);
    Field v0 = random_unit_field(p.ustar.grid, p.ustar.components(), rng);
    v0 *= alpha * eps;
    AlgebraElement pv0 = project_center(p, v0);
    AdjointMap l = adjoint_map(p.x);

    SemiImplicitStepper stepper(p.ustar.grid, p.model->diffusion(), std::nullopt, opts.dt);
    Field u = p.ustar + v0;
    double t = 0.0;
    PathOutcome& out = outcomes[path];
    const int n_steps = static_cast<int>(std::llround(T / opts.dt));
    for (int k = 1; k <= n_steps; ++k) {
      u = sim_step(*p.model, stepper, sigma > 0 ? scaled : NoiseSpec::off(), u, t, rng);
      t = k * opts.dt;
      if (!u.all_finite() || norm_sup(u) > opts.blow_threshold) {
        out.blew_up = true;
        out.escaped = true;
        out.escape_time = t;
        break;
      }
      if (k % opts.save_every != 0 && k != n_steps) continue;

      // one-shot predicted phase at time t
      Eigen::VectorXd coords = exp_adjoint(l, t).matrix * pv0.coords;
      GroupElement gamma =
          compose(exp_group(AlgebraElement::from_coords(p.x.kind, t * p.x.coords)),
                  exp_group(AlgebraElement::from_coords(p.x.kind, coords)));
      double dev = norm_l2(u - act(gamma, p.ustar));
      if (dev - m3 * alpha * std::exp(-a_rate * t) * eps >= eps) {
        out.escaped = true;
        out.escape_time = t;
        break;
      }
    }
  });
  return aggregate(eps, sigma, T, n_paths, outcomes);
}

// ---------------------------------------------------------------------------
// Scalar stochastic-convolution tails
// ---------------------------------------------------------------------------

TailReport stochconv_tail_check(double decay_rate, double T, int n_paths,
                                const std::vector<double>& lambda_grid, std::uint64_t seed,
                                const TailCheckOptions& opts) {
  if (!(decay_rate >= 0.0)) throw StructuralError("stochconv_tail_check: decay rate < 0");
  if (lambda_grid.empty()) throw StructuralError("stochconv_tail_check: empty lambda grid");

  const int n_steps = static_cast<int>(std::llround(T / opts.dt));
  const double dt = T / n_steps;
  // exact one-step update of the convolution z_{k+1} = e^{-r dt} z_k + inc
  const double decay_step = std::exp(-decay_rate * dt);
  const double inc_std = decay_rate > 0.0
                             ? std::sqrt((1.0 - std::exp(-2.0 * decay_rate * dt)) /
                                         (2.0 * decay_rate))
                             : std::sqrt(dt);

  std::vector<double> sups(n_paths);
  parallel_paths(n_paths, opts.threads, [&](int path) {
    auto rng = path_rng(seed, path);
    double z = 0.0, sup = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      z = decay_step * z + inc_std * std_normal(rng);
      sup = std::max(sup, std::abs(z));
    }
    sups[path] = sup;
  });

  TailReport rep;
  rep.lambda_grid = lambda_grid;
  rep.K = opts.calibration * std::sqrt(T);  // ||f|| = 1
  for (double lambda : lambda_grid) {
    int count = 0;
    for (double s : sups)
      if (s > lambda) ++count;
    double survival = static_cast<double>(count) / n_paths;
    double bound = subgaussian_bound(rep.K, lambda);
    rep.empirical_survival.push_back(survival);
    rep.bound_values.push_back(bound);
    if (survival > bound) ++rep.violations;
  }
  return rep;
}

}  // namespace orbitrack
