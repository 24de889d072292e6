#include "orbitrack/config.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "orbitrack/errors.hpp"
#include "orbitrack/guess.hpp"
#include "orbitrack/io.hpp"
#include "orbitrack/mc.hpp"
#include "orbitrack/phase.hpp"
#include "orbitrack/rng.hpp"
#include "orbitrack/sim.hpp"

namespace orbitrack {

using nlohmann::json;

namespace {

// ---- schema ----------------------------------------------------------------

struct KeySet {
  std::vector<std::string> keys;
  bool contains(const std::string& k) const {
    return std::find(keys.begin(), keys.end(), k) != keys.end();
  }
};

void check_keys(const json& obj, const KeySet& allowed, const std::string& path) {
  if (!obj.is_object()) throw StructuralError("config: " + path + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.contains(it.key()))
      throw StructuralError("config: unknown key '" + path + "." + it.key() + "'");
}

void require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key))
    throw StructuralError("config: missing required key '" + path + "." + key + "'");
}

const KeySet kTop{{"model", "grid", "pattern", "decomposition", "decay", "noise", "sim",
                   "experiment", "pattern_dir", "seed", "output"}};
const KeySet kModel{{"name", "params"}};
const KeySet kGrid{{"dim", "extent", "points"}};
const KeySet kPattern{{"mode", "guess", "speed", "tol", "max_iter", "boundary_decay_tol",
                       "check_boundary", "dense_limit"}};
const KeySet kGuess{{"builtin", "file", "radius", "width", "t_relax", "coarse_points"}};
const KeySet kDecomposition{{"dense_limit", "extra_pairs", "principal_angle_tol", "require_gap"}};
const KeySet kDecay{{"t_max", "n_t", "dt", "samples", "fit_start"}};
const KeySet kNoise{{"kind", "sigma", "component", "count", "decay", "amp", "envelope_width",
                     "kernel_width", "kernel_amp", "g_poly", "cutoff"}};
const KeySet kSim{{"dt", "t_end", "save_every", "frame", "blow_threshold", "snapshots",
                   "initial_eps", "initial_kind"}};
const KeySet kExperiment{{"eps", "eps_list", "sigma_list", "T", "n_paths", "mode", "alpha",
                          "decay_rate", "lambda_count", "lambda_max_over_K", "dt", "save_every",
                          "recursion_interval", "calibration"}};

void validate_sections(const json& cfg, const std::string& command) {
  check_keys(cfg, kTop, "(top)");
  if (cfg.contains("model")) {
    check_keys(cfg["model"], kModel, "model");
    require(cfg["model"], "name", "model");
  }
  if (cfg.contains("grid")) {
    check_keys(cfg["grid"], kGrid, "grid");
    for (const char* k : {"dim", "extent", "points"}) require(cfg["grid"], k, "grid");
  }
  if (cfg.contains("pattern")) {
    check_keys(cfg["pattern"], kPattern, "pattern");
    if (cfg["pattern"].contains("guess")) check_keys(cfg["pattern"]["guess"], kGuess,
                                                     "pattern.guess");
  }
  if (cfg.contains("decomposition"))
    check_keys(cfg["decomposition"], kDecomposition, "decomposition");
  if (cfg.contains("decay")) check_keys(cfg["decay"], kDecay, "decay");
  if (cfg.contains("noise")) check_keys(cfg["noise"], kNoise, "noise");
  if (cfg.contains("sim")) check_keys(cfg["sim"], kSim, "sim");
  if (cfg.contains("experiment")) check_keys(cfg["experiment"], kExperiment, "experiment");

  if (command == "profile") {
    require(cfg, "model", "(top)");
    require(cfg, "grid", "(top)");
    require(cfg, "pattern", "(top)");
  } else if (command == "spectrum" || command == "detstab" || command == "mc") {
    require(cfg, "pattern_dir", "(top)");
    if (command != "spectrum") require(cfg, "experiment", "(top)");
  } else if (command == "simulate") {
    require(cfg, "sim", "(top)");
    if (!cfg.contains("pattern_dir")) {
      require(cfg, "model", "(top)");
      require(cfg, "grid", "(top)");
    }
  } else if (command == "tailcheck") {
    require(cfg, "experiment", "(top)");
  } else {
    throw StructuralError("unknown command '" + command + "'");
  }
}

// ---- helpers ---------------------------------------------------------------

template <typename T>
T get_or(const json& obj, const std::string& key, T dflt) {
  return obj.contains(key) ? obj[key].get<T>() : dflt;
}

Grid grid_from(const json& g) {
  return Grid(g["dim"].get<int>(), g["extent"].get<double>(), g["points"].get<int>());
}

std::shared_ptr<Model> model_from(const json& m) {
  std::map<std::string, double> params;
  if (m.contains("params")) params = m["params"].get<std::map<std::string, double>>();
  return make_model(m["name"].get<std::string>(), params);
}

NoiseSpec noise_from(const json& cfg, const Grid& grid, int ncomp) {
  if (!cfg.contains("noise")) return NoiseSpec::off();
  const json& n = cfg["noise"];
  std::string kind = get_or<std::string>(n, "kind", "off");
  double sigma = get_or<double>(n, "sigma", 0.0);
  if (kind == "off") return NoiseSpec::off();
  if (kind == "additive_family") {
    auto spec = NoiseSpec::additive_mode_family(
        grid, ncomp, get_or<int>(n, "component", 0), get_or<int>(n, "count", 8),
        get_or<double>(n, "decay", 2.0), get_or<double>(n, "amp", 1.0),
        get_or<double>(n, "envelope_width", grid.extent / 4.0), sigma);
    spec.spectral_cutoff = get_or<int>(n, "cutoff", 0);
    return spec;
  }
  if (kind == "conv_mult") {
    double kw = get_or<double>(n, "kernel_width", 1.0);
    double ka = get_or<double>(n, "kernel_amp", 1.0);
    Field kernel(grid, 1);
    for (int i = 0; i < grid.points; ++i) {
      double x = grid.coord(i);
      kernel.values(i, 0) = ka * std::exp(-x * x / (2.0 * kw * kw));
    }
    Eigen::VectorXd gp = Eigen::VectorXd::Ones(1);
    if (n.contains("g_poly")) {
      auto v = n["g_poly"].get<std::vector<double>>();
      gp = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size()));
    }
    auto spec = NoiseSpec::conv_mult(kernel, gp, get_or<int>(n, "component", 0), sigma);
    spec.spectral_cutoff = get_or<int>(n, "cutoff", 0);
    return spec;
  }
  throw StructuralError("config: unknown noise.kind '" + kind + "'");
}

void write_manifest(const std::filesystem::path& out, const std::string& command,
                    const json& materialized, std::uint64_t seed) {
  json manifest;
  manifest["tool"] = "orbitrack";
  manifest["version"] = "0.1.0";
  manifest["command"] = command;
  manifest["seed"] = seed;
  manifest["config"] = materialized;
  std::ofstream(out / "manifest.json") << manifest.dump(2) << "\n";
}

// ---- commands ----------------------------------------------------------

int cmd_profile(const json& cfg, const std::filesystem::path& out, std::uint64_t seed) {
  auto model = model_from(cfg["model"]);
  Grid grid = grid_from(cfg["grid"]);
  const json& pc = cfg["pattern"];
  std::string mode = get_or<std::string>(pc, "mode", "periodic");

  ProfileOptions opts;
  opts.tol = get_or<double>(pc, "tol", 1e-8);
  opts.max_iter = get_or<int>(pc, "max_iter", 40);
  opts.boundary_decay_tol = get_or<double>(pc, "boundary_decay_tol", 1e-8);
  opts.check_boundary = get_or<bool>(pc, "check_boundary", true);
  opts.dense_limit = get_or<int>(pc, "dense_limit", 4500);

  Field guess(grid, model->components());
  std::optional<double> measured_omega;
  if (pc.contains("guess") && pc["guess"].contains("file")) {
    guess = read_field_csv(pc["guess"]["file"].get<std::string>(), grid, model->components());
  } else {
    std::string builtin =
        pc.contains("guess") ? get_or<std::string>(pc["guess"], "builtin", "") : "";
    if (builtin == "nagumo_front") {
      guess = nagumo_front_guess(grid);
    } else if (builtin == "fhn_pulse") {
      guess = fhn_pulse_guess(model, grid,
                              pc.contains("guess") ? get_or<double>(pc["guess"], "t_relax", 100.0)
                                                   : 100.0);
    } else if (builtin == "vortex") {
      auto [field, omega] = vortex_relaxed_guess(
          model, grid, get_or<int>(pc["guess"], "coarse_points", 128),
          get_or<double>(pc["guess"], "t_relax", 120.0),
          get_or<double>(pc["guess"], "radius", 2.8), get_or<double>(pc["guess"], "width", 1.0));
      guess = field;
      measured_omega = omega;
    } else {
      throw StructuralError("config: pattern.guess needs a 'file' or a known 'builtin'");
    }
  }

  Eigen::VectorXd speed = Eigen::VectorXd::Zero(algebra_dim(model->group()));
  if (measured_omega && model->group() == GroupKind::SE2) speed[2] = *measured_omega;
  if (pc.contains("speed")) {
    auto v = pc["speed"].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != speed.size())
      throw StructuralError("config: pattern.speed has wrong dimension");
    speed = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<int>(v.size()));
  }

  Pattern p;
  if (mode == "front") {
    p = solve_front_profile(model, guess, speed[0], opts);
  } else if (mode == "stationary") {
    opts.fix_x = true;
    p = solve_profile(model, guess, AlgebraElement::from_coords(model->group(), speed), opts);
  } else if (mode == "periodic") {
    p = solve_profile(model, guess, AlgebraElement::from_coords(model->group(), speed), opts);
  } else {
    throw StructuralError("config: unknown pattern.mode '" + mode + "'");
  }

  save_pattern(out / "pattern", p);
  std::cout << "profile: residual " << p.residual_norm << ", speed coords ["
            << p.x.coords.transpose() << "]\n";
  return 0;
}

int cmd_spectrum(const json& cfg, const std::filesystem::path& out, std::uint64_t seed) {
  Pattern p = load_pattern(cfg["pattern_dir"].get<std::string>());
  DecompositionOptions dopts;
  if (cfg.contains("decomposition")) {
    const json& d = cfg["decomposition"];
    dopts.dense_limit = get_or<int>(d, "dense_limit", dopts.dense_limit);
    dopts.extra_pairs = get_or<int>(d, "extra_pairs", dopts.extra_pairs);
    dopts.principal_angle_tol =
        get_or<double>(d, "principal_angle_tol", dopts.principal_angle_tol);
    dopts.require_gap = get_or<bool>(d, "require_gap", dopts.require_gap);
  }
  spectral_decomposition(p, dopts);

  DecayOptions eopts;
  double t_max = 40.0;
  int n_t = 40;
  if (cfg.contains("decay")) {
    const json& d = cfg["decay"];
    t_max = get_or<double>(d, "t_max", t_max);
    n_t = get_or<int>(d, "n_t", n_t);
    eopts.dt = get_or<double>(d, "dt", eopts.dt);
    eopts.samples = get_or<int>(d, "samples", eopts.samples);
    eopts.fit_start = get_or<double>(d, "fit_start", eopts.fit_start);
  }
  eopts.seed = seed;
  auto sc = estimate_decay(p, t_max, n_t, eopts);

  save_pattern(out / "pattern", p);
  json rep;
  rep["center_eigenvalues"] = json::array();
  for (auto& l : p.center_eigenvalues) rep["center_eigenvalues"].push_back({l.real(), l.imag()});
  rep["spectral_gap"] = p.spectral_gap;
  rep["M"] = sc.M;
  rep["a"] = sc.a;
  rep["M1"] = sc.M1;
  rep["M2"] = sc.M2;
  rep["M3"] = sc.M3;
  std::ofstream(out / "spectrum.json") << rep.dump(2) << "\n";
  std::cout << "spectrum: gap " << p.spectral_gap << ", M " << sc.M << ", a " << sc.a << "\n";
  return 0;
}

int cmd_simulate(const json& cfg, const std::filesystem::path& out, std::uint64_t seed) {
  std::optional<Pattern> pat;
  std::shared_ptr<Model> model;
  std::optional<Grid> grid;
  if (cfg.contains("pattern_dir")) {
    pat = load_pattern(cfg["pattern_dir"].get<std::string>());
    model = pat->model;
    grid = pat->ustar.grid;
  } else {
    model = model_from(cfg["model"]);
    grid = grid_from(cfg["grid"]);
  }

  const json& sc = cfg["sim"];
  SimConfig sim;
  sim.model = model;
  sim.noise = noise_from(cfg, *grid, model->components());
  sim.dt = get_or<double>(sc, "dt", 1e-3);
  sim.t_end = get_or<double>(sc, "t_end", 1.0);
  sim.save_every = get_or<int>(sc, "save_every", 100);
  sim.blow_threshold = get_or<double>(sc, "blow_threshold", 1e4);
  sim.seed = seed;
  std::string frame = get_or<std::string>(sc, "frame", "stationary");
  if (frame == "comoving") {
    if (!pat) throw StructuralError("config: comoving frame needs pattern_dir");
    sim.frame = Frame::Comoving;
    sim.comoving_x = pat->x;
  }

  Field u0 = pat ? pat->ustar : Field::zero(*grid, model->components());
  double eps = get_or<double>(sc, "initial_eps", 0.0);
  std::string ikind = get_or<std::string>(sc, "initial_kind", "random_unit");
  if (eps != 0.0) {
    std::mt19937_64 rng(seed + 999);
    Field r(*grid, model->components());
    for (int c = 0; c < r.components(); ++c)
      for (int i = 0; i < grid->total_points(); ++i) r.values(i, c) = std_normal(rng);
    r *= 1.0 / norm_l2(r);
    if (ikind == "stable_random") {
      if (!pat || !pat->decomposed)
        throw StructuralError("config: stable_random initial needs a decomposed pattern");
      r = project_stable(*pat, r);
      r *= 1.0 / norm_l2(r);
    } else if (ikind != "random_unit") {
      throw StructuralError("config: unknown sim.initial_kind '" + ikind + "'");
    }
    u0 += eps * r;
  }

  DeviationTracker tracker;
  if (pat && pat->decomposed && frame == "stationary") {
    Pattern& pref = *pat;
    auto gamma_prev = std::make_shared<GroupElement>(GroupElement::identity(pref.x.kind));
    tracker = [&pref, gamma_prev](double t, const Field& u) {
      GroupElement seed_g = compose(
          exp_group(AlgebraElement::from_coords(pref.x.kind, t * pref.x.coords)), *gamma_prev);
      auto est = nearest_phase(pref, u, seed_g);
      // keep the drift part for the next seed
      *gamma_prev = compose(
          inverse(exp_group(AlgebraElement::from_coords(pref.x.kind, t * pref.x.coords))),
          est.gamma);
      Eigen::VectorXd coords(algebra_dim(pref.x.kind));
      auto tr = est.gamma.translation();
      for (int i = 0; i < tr.size(); ++i) coords[i] = tr[i];
      if (pref.x.kind == GroupKind::SE2) coords[2] = est.gamma.rotation_angle();
      return std::make_pair(est.residual, coords);
    };
  }

  auto traj = simulate(sim, u0, tracker);
  write_trajectory_csv(out / "traj.csv", traj);
  if (get_or<bool>(sc, "snapshots", false)) {
    for (size_t i = 0; i < traj.fields.size(); ++i)
      write_field_csv(out / ("snapshot_" + std::to_string(i) + ".csv"), traj.fields[i]);
  }
  std::cout << "simulate: " << traj.times.size() << " records"
            << (traj.blew_up ? " (blew up)" : "") << "\n";
  if (traj.blew_up) return 3;
  return 0;
}

int cmd_detstab(const json& cfg, const std::filesystem::path& out, std::uint64_t seed) {
  Pattern p = load_pattern(cfg["pattern_dir"].get<std::string>());
  if (!p.decomposed || !p.constants)
    throw StructuralError("detstab: pattern_dir must hold a decomposed pattern with constants "
                          "(run spectrum first)");
  const json& e = cfg["experiment"];
  auto eps_list = e.contains("eps_list") ? e["eps_list"].get<std::vector<double>>()
                                         : std::vector<double>{1e-1, 3e-2, 1e-2};
  DetstabOptions opts;
  opts.dt = get_or<double>(e, "dt", 1e-3);
  opts.seed = seed;
  double T = get_or<double>(e, "T", 2.0 * std::log(p.constants->M3 + 1.0) / p.constants->a);

  auto rep = detstab_experiment(p, eps_list, T, opts);
  std::ofstream csv(out / "detstab.csv");
  csv << "eps,residual,ratio\n";
  for (size_t i = 0; i < rep.eps_list.size(); ++i)
    csv << format_g17(rep.eps_list[i]) << ',' << format_g17(rep.residuals[i]) << ','
        << format_g17(rep.ratios[i]) << "\n";
  json summary;
  summary["excess_exponent"] = rep.excess_exponent;
  summary["linear_coeff"] = rep.linear_coeff;
  summary["excess_coeff"] = rep.excess_coeff;
  summary["decay_floor"] = rep.decay_floor;
  summary["T"] = T;
  std::ofstream(out / "summary.json") << summary.dump(2) << "\n";
  std::cout << "detstab: exponent " << rep.excess_exponent << "\n";
  return 0;
}

int cmd_mc(const json& cfg, const std::filesystem::path& out, std::uint64_t seed, int threads) {
  Pattern p = load_pattern(cfg["pattern_dir"].get<std::string>());
  if (!p.decomposed || !p.constants)
    throw StructuralError("mc: pattern_dir must hold a decomposed pattern with constants");
  const json& e = cfg["experiment"];
  double eps = e["eps"].get<double>();
  auto sigma_list = e["sigma_list"].get<std::vector<double>>();
  double T = e["T"].get<double>();
  int n_paths = e["n_paths"].get<int>();
  std::string mode = get_or<std::string>(e, "mode", "escape");
  double alpha = get_or<double>(e, "alpha", 1.0);

  EscapeOptions opts;
  opts.dt = get_or<double>(e, "dt", 2e-3);
  opts.save_every = get_or<int>(e, "save_every", 50);
  opts.recursion_interval = get_or<double>(e, "recursion_interval", 0.0);
  opts.threads = threads;

  NoiseSpec noise = noise_from(cfg, p.ustar.grid, p.ustar.components());

  std::ofstream csv(out / "escape.csv");
  csv << "sigma,eps,T,n_paths,n_escapes,fraction,wilson_lo,wilson_hi,degenerate\n";
  json summary = json::array();
  for (double sigma : sigma_list) {
    EscapeReport rep = mode == "short"
                           ? shortterm_experiment(p, noise, eps, sigma, alpha, T, n_paths, seed,
                                                  opts)
                           : escape_probability(p, noise, eps, sigma, T, n_paths, seed, opts);
    csv << format_g17(sigma) << ',' << format_g17(eps) << ',' << format_g17(T) << ','
        << rep.n_paths << ',' << rep.n_escapes << ',' << format_g17(rep.escape_fraction) << ','
        << format_g17(rep.wilson_lo) << ',' << format_g17(rep.wilson_hi) << ','
        << (rep.degenerate ? 1 : 0) << "\n";
    json row;
    row["sigma"] = sigma;
    row["fraction"] = rep.escape_fraction;
    row["wilson"] = {rep.wilson_lo, rep.wilson_hi};
    row["n_escapes"] = rep.n_escapes;
    summary.push_back(row);
    std::cout << "mc: sigma " << sigma << " fraction " << rep.escape_fraction << "\n";
  }
  std::ofstream(out / "summary.json") << summary.dump(2) << "\n";
  return 0;
}

int cmd_tailcheck(const json& cfg, const std::filesystem::path& out, std::uint64_t seed,
                  int threads) {
  const json& e = cfg["experiment"];
  TailCheckOptions opts;
  opts.dt = get_or<double>(e, "dt", 1e-4);
  opts.calibration = get_or<double>(e, "calibration", 0.75);
  opts.threads = threads;
  double decay_rate = get_or<double>(e, "decay_rate", 1.0);
  double T = get_or<double>(e, "T", 1.0);
  int n_paths = get_or<int>(e, "n_paths", 10000);
  int count = get_or<int>(e, "lambda_count", 20);
  double max_over_k = get_or<double>(e, "lambda_max_over_K", 5.0);

  double K = opts.calibration * std::sqrt(T);
  std::vector<double> grid;
  for (int i = 0; i < count; ++i) grid.push_back(max_over_k * K * i / (count - 1));

  auto rep = stochconv_tail_check(decay_rate, T, n_paths, grid, seed, opts);
  std::ofstream csv(out / "tail.csv");
  csv << "lambda,empirical_survival,bound\n";
  for (size_t i = 0; i < rep.lambda_grid.size(); ++i)
    csv << format_g17(rep.lambda_grid[i]) << ',' << format_g17(rep.empirical_survival[i]) << ','
        << format_g17(rep.bound_values[i]) << "\n";
  json summary;
  summary["K"] = rep.K;
  summary["violations"] = rep.violations;
  std::ofstream(out / "summary.json") << summary.dump(2) << "\n";
  std::cout << "tailcheck: violations " << rep.violations << "\n";
  return rep.violations == 0 ? 0 : 3;
}

}  // namespace

json load_config(const std::filesystem::path& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw StructuralError("config: cannot open " + path.string());
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw StructuralError(std::string("config: parse error: ") + e.what());
  }
  validate_sections(cfg, command);
  return cfg;
}

json materialize_defaults(const json& cfg, const std::string& command) {
  json out = cfg;
  out["seed"] = cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0;
  out["output"] = cfg.contains("output") ? cfg["output"].get<std::string>() : ".";
  (void)command;
  return out;
}

int run_command(const std::string& command, const CliOptions& opts) {
  try {
    json cfg = load_config(opts.config_path, command);
    std::uint64_t seed =
        opts.seed_override ? *opts.seed_override
                           : (cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0);
    std::filesystem::path out =
        !opts.out_dir.empty()
            ? opts.out_dir
            : std::filesystem::path(cfg.contains("output") ? cfg["output"].get<std::string>()
                                                           : ".");
    std::filesystem::create_directories(out);

    int threads = 1;
    if (opts.threads_override) {
      threads = *opts.threads_override;
    } else if (const char* env = std::getenv("ORBITRACK_THREADS")) {
      threads = std::max(1, std::atoi(env));
    }

    json materialized = materialize_defaults(cfg, command);
    materialized["seed"] = seed;
    materialized["threads"] = threads;
    write_manifest(out, command, materialized, seed);

    try {
      if (command == "profile") return cmd_profile(cfg, out, seed);
      if (command == "spectrum") return cmd_spectrum(cfg, out, seed);
      if (command == "simulate") return cmd_simulate(cfg, out, seed);
      if (command == "detstab") return cmd_detstab(cfg, out, seed);
      if (command == "mc") return cmd_mc(cfg, out, seed, threads);
      if (command == "tailcheck") return cmd_tailcheck(cfg, out, seed, threads);
      throw StructuralError("unknown command '" + command + "'");
    } catch (const ConvergenceError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 3;
    } catch (const InstabilityError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 3;
    } catch (const DomainTooSmallError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 3;
    } catch (const DecompositionError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 3;
    } catch (const TrackingLostError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 3;
    } catch (const NumericalError& e) {
      std::cerr << "numerical failure: " << e.what() << "\n";
      return 3;
    }
  } catch (const StructuralError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace orbitrack
