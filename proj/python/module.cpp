#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "orbitrack/errors.hpp"
#include "orbitrack/guess.hpp"
#include "orbitrack/mc.hpp"
#include "orbitrack/phase.hpp"
#include "orbitrack/sim.hpp"

// Python bindings for the main operations: group arithmetic, fields and
// their actions, profile solving, spectral decomposition, phase prediction,
// and the simulators.

namespace py = pybind11;
using namespace orbitrack;

namespace {

GroupKind kind_from(const std::string& s) {
  if (s == "translation_1d") return GroupKind::Translation1D;
  if (s == "se2") return GroupKind::SE2;
  throw StructuralError("unknown group kind '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_orbitrack, m) {
  m.doc() = "stochastically forced pattern dynamics: profiles, phases, escapes";

  py::register_exception<StructuralError>(m, "StructuralError");
  py::register_exception<ConvergenceError>(m, "ConvergenceError");
  py::register_exception<InstabilityError>(m, "InstabilityError");
  py::register_exception<DomainTooSmallError>(m, "DomainTooSmallError");
  py::register_exception<DecompositionError>(m, "DecompositionError");
  py::register_exception<TrackingLostError>(m, "TrackingLostError");

  py::class_<AlgebraElement>(m, "AlgebraElement")
      .def_static(
          "from_coords",
          [](const std::string& kind, const Eigen::VectorXd& c) {
            return AlgebraElement::from_coords(kind_from(kind), c);
          },
          py::arg("kind"), py::arg("coords"))
      .def_property_readonly("coords", [](const AlgebraElement& a) { return a.coords; })
      .def_property_readonly("matrix", [](const AlgebraElement& a) { return a.matrix; });

  py::class_<GroupElement>(m, "GroupElement")
      .def_static("identity",
                  [](const std::string& kind) { return GroupElement::identity(kind_from(kind)); })
      .def_static("from_matrix",
                  [](const std::string& kind, const Eigen::MatrixXd& mat) {
                    return GroupElement::from_matrix(kind_from(kind), mat);
                  })
      .def_property_readonly("matrix", [](const GroupElement& g) { return g.matrix; })
      .def("translation", &GroupElement::translation)
      .def("rotation_angle", &GroupElement::rotation_angle);

  py::class_<AdjointMap>(m, "AdjointMap")
      .def_property_readonly("matrix", [](const AdjointMap& l) { return l.matrix; });

  m.def("bracket", &bracket);
  m.def("adjoint_map", &adjoint_map);
  m.def("exp_adjoint", &exp_adjoint);
  m.def("exp_group", &exp_group);
  m.def("compose", &compose);
  m.def("inverse", &inverse);
  m.def("group_distance", &group_distance);

  py::class_<Grid>(m, "Grid")
      .def(py::init<int, double, int>(), py::arg("dim"), py::arg("extent"), py::arg("points"))
      .def_readonly("dim", &Grid::dim)
      .def_readonly("extent", &Grid::extent)
      .def_readonly("points", &Grid::points)
      .def_property_readonly("spacing", &Grid::spacing)
      .def("axis_coords", &Grid::axis_coords);

  py::class_<Field>(m, "Field")
      .def(py::init([](const Grid& g, const Eigen::MatrixXd& values) {
             return Field(g, values);
           }),
           py::arg("grid"), py::arg("values"))
      .def_static("zero", &Field::zero)
      .def_readonly("grid", &Field::grid)
      .def_property_readonly("values", [](const Field& f) { return f.values; })
      .def("__add__", [](const Field& a, const Field& b) { return a + b; })
      .def("__sub__", [](const Field& a, const Field& b) { return a - b; })
      .def("__rmul__", [](const Field& f, double s) { return s * f; });

  m.def("act", &act);
  m.def("infinitesimal_act", &infinitesimal_act);
  m.def("derivative", &derivative, py::arg("field"), py::arg("axis"));
  m.def("norm_l2", &norm_l2);
  m.def("norm_sup", &norm_sup);
  m.def(
      "norm",
      [](const Field& f, const std::string& kind, double param) {
        NormKind k;
        if (kind == "lp") k = NormKind::Lp;
        else if (kind == "hk") k = NormKind::Hk;
        else if (kind == "hs2") k = NormKind::Hs2;
        else if (kind == "sup") k = NormKind::Sup;
        else throw StructuralError("unknown norm kind '" + kind + "'");
        return norm(f, {k, param});
      },
      py::arg("field"), py::arg("kind"), py::arg("param") = 2.0);
  m.def("inner", &inner);

  py::class_<Model, std::shared_ptr<Model>>(m, "Model")
      .def_property_readonly("name", &Model::name)
      .def_property_readonly("components", &Model::components)
      .def_property_readonly("params", &Model::params);
  m.def("make_model", &make_model, py::arg("name"),
        py::arg("params") = std::map<std::string, double>{});
  m.def("apply_rhs", &apply_rhs);

  py::class_<StabilityConstants>(m, "StabilityConstants")
      .def_readonly("M", &StabilityConstants::M)
      .def_readonly("a", &StabilityConstants::a)
      .def_readonly("M1", &StabilityConstants::M1)
      .def_readonly("M2", &StabilityConstants::M2)
      .def_readonly("M3", &StabilityConstants::M3);

  py::class_<Pattern>(m, "Pattern")
      .def_property_readonly("ustar", [](const Pattern& p) { return p.ustar; })
      .def_property_readonly("x", [](const Pattern& p) { return p.x; })
      .def_readonly("residual_norm", &Pattern::residual_norm)
      .def_readonly("decomposed", &Pattern::decomposed)
      .def_readonly("center_eigenvalues", &Pattern::center_eigenvalues)
      .def_readonly("spectral_gap", &Pattern::spectral_gap)
      .def_readonly("constants", &Pattern::constants)
      .def_property_readonly("center_tangents", [](const Pattern& p) { return p.center_tangents; })
      .def_property_readonly("adjoint_functions",
                             [](const Pattern& p) { return p.adjoint_functions; });

  m.def(
      "solve_profile",
      [](std::shared_ptr<Model> model, const Field& guess, const AlgebraElement& x, double tol,
         double boundary_decay_tol, bool check_boundary, bool fix_x) {
        ProfileOptions opts;
        opts.tol = tol;
        opts.boundary_decay_tol = boundary_decay_tol;
        opts.check_boundary = check_boundary;
        opts.fix_x = fix_x;
        return solve_profile(std::move(model), guess, x, opts);
      },
      py::arg("model"), py::arg("guess"), py::arg("guess_x"), py::arg("tol") = 1e-8,
      py::arg("boundary_decay_tol") = 1e-8, py::arg("check_boundary") = true,
      py::arg("fix_x") = false);
  m.def(
      "solve_front_profile",
      [](std::shared_ptr<Model> model, const Field& guess, double speed) {
        return solve_front_profile(std::move(model), guess, speed);
      },
      py::arg("model"), py::arg("guess"), py::arg("guess_speed"));
  m.def(
      "spectral_decomposition",
      [](Pattern& p) {
        spectral_decomposition(p);
        return p;
      },
      py::arg("pattern"));
  m.def(
      "estimate_decay",
      [](Pattern& p, double t_max, int n_t, double dt, int samples) {
        DecayOptions opts;
        opts.dt = dt;
        opts.samples = samples;
        return estimate_decay(p, t_max, n_t, opts);
      },
      py::arg("pattern"), py::arg("t_max"), py::arg("n_t"), py::arg("dt") = 1e-2,
      py::arg("samples") = 8);
  m.def("project_center", &project_center);
  m.def("project_stable", &project_stable);

  py::class_<PhaseEstimate>(m, "PhaseEstimate")
      .def_property_readonly("gamma", [](const PhaseEstimate& e) { return e.gamma; })
      .def_readonly("center_coords", &PhaseEstimate::center_coords)
      .def_readonly("t", &PhaseEstimate::t)
      .def_readonly("residual", &PhaseEstimate::residual)
      .def_readonly("trusted", &PhaseEstimate::trusted);

  m.def("predicted_phase", &predicted_phase, py::arg("pattern"), py::arg("v0"), py::arg("t"));
  m.def(
      "nearest_phase",
      [](const Pattern& p, const Field& u, const GroupElement& seed) {
        return nearest_phase(p, u, seed);
      },
      py::arg("pattern"), py::arg("u"), py::arg("seed"));
  m.def(
      "phase_recursion",
      [](const Pattern& p, const std::vector<std::pair<double, Field>>& snaps, double interval) {
        return phase_recursion(p, snaps, interval);
      },
      py::arg("pattern"), py::arg("snapshots"), py::arg("interval"));

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def_static("off", &NoiseSpec::off)
      .def_static("additive", &NoiseSpec::additive, py::arg("coefficients"), py::arg("sigma"))
      .def_static("additive_mode_family", &NoiseSpec::additive_mode_family, py::arg("grid"),
                  py::arg("ncomp"), py::arg("component"), py::arg("count"), py::arg("decay"),
                  py::arg("amp"), py::arg("envelope_width"), py::arg("sigma"))
      .def_static("conv_mult", &NoiseSpec::conv_mult, py::arg("kernel"), py::arg("g_poly"),
                  py::arg("component"), py::arg("sigma"))
      .def("series_energy", &NoiseSpec::series_energy);
  m.def("hs_norm_G", &hs_norm_G, py::arg("u"), py::arg("phi"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_property_readonly("fields", [](const Trajectory& t) { return t.fields; })
      .def_readonly("deviation", &Trajectory::deviation)
      .def_readonly("blew_up", &Trajectory::blew_up)
      .def_readonly("blow_time", &Trajectory::blow_time);

  m.def(
      "simulate",
      [](std::shared_ptr<Model> model, const Field& u0, const NoiseSpec& noise, double dt,
         double t_end, int save_every, std::uint64_t seed, const std::string& frame,
         std::optional<AlgebraElement> comoving_x, double blow_threshold) {
        SimConfig cfg;
        cfg.model = std::move(model);
        cfg.noise = noise;
        cfg.dt = dt;
        cfg.t_end = t_end;
        cfg.save_every = save_every;
        cfg.seed = seed;
        cfg.blow_threshold = blow_threshold;
        if (frame == "comoving") {
          cfg.frame = Frame::Comoving;
          cfg.comoving_x = comoving_x;
        }
        return simulate(cfg, u0);
      },
      py::arg("model"), py::arg("u0"), py::arg("noise"), py::arg("dt"), py::arg("t_end"),
      py::arg("save_every") = 10, py::arg("seed") = 0, py::arg("frame") = "stationary",
      py::arg("comoving_x") = std::nullopt, py::arg("blow_threshold") = 1e4);

  py::class_<EscapeReport>(m, "EscapeReport")
      .def_readonly("epsilon", &EscapeReport::epsilon)
      .def_readonly("sigma", &EscapeReport::sigma)
      .def_readonly("n_paths", &EscapeReport::n_paths)
      .def_readonly("n_escapes", &EscapeReport::n_escapes)
      .def_readonly("escape_fraction", &EscapeReport::escape_fraction)
      .def_readonly("wilson_lo", &EscapeReport::wilson_lo)
      .def_readonly("wilson_hi", &EscapeReport::wilson_hi)
      .def_readonly("degenerate", &EscapeReport::degenerate);

  m.def(
      "escape_probability",
      [](const Pattern& p, const NoiseSpec& noise, double eps, double sigma, double T, int n_paths,
         std::uint64_t seed, int threads) {
        EscapeOptions opts;
        opts.threads = threads;
        return escape_probability(p, noise, eps, sigma, T, n_paths, seed, opts);
      },
      py::arg("pattern"), py::arg("noise"), py::arg("eps"), py::arg("sigma"), py::arg("T"),
      py::arg("n_paths"), py::arg("seed") = 0, py::arg("threads") = 1);
  m.def("subgaussian_bound", &subgaussian_bound, py::arg("K"), py::arg("lam"));
  m.def("wilson_interval", &wilson_interval, py::arg("successes"), py::arg("n"));

  m.def("nagumo_front_guess", &nagumo_front_guess);
  m.def("fhn_pulse_guess", &fhn_pulse_guess, py::arg("model"), py::arg("grid"),
        py::arg("t_relax") = 100.0, py::arg("dt") = 4e-3);
  m.def("vortex_guess", &vortex_guess, py::arg("model"), py::arg("grid"), py::arg("radius") = 3.0,
        py::arg("width") = 1.0);
}
