#ifndef ORBITRACK_SIM_HPP
#define ORBITRACK_SIM_HPP

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "orbitrack/model.hpp"
#include "orbitrack/noise.hpp"
#include "orbitrack/pattern.hpp"
#include "orbitrack/stepping.hpp"

// Time integration: semi-implicit Euler-Maruyama for the SPDE (Ito, implicit
// spectral diffusion, explicit reaction and noise) in the stationary or the
// comoving frame, plus the linearized evolution along the pattern.

namespace orbitrack {

enum class Frame { Stationary, Comoving };

struct SimConfig {
  std::shared_ptr<Model> model;
  NoiseSpec noise;
  Frame frame = Frame::Stationary;
  std::optional<AlgebraElement> comoving_x;  // required in the comoving frame
  double dt = 1e-3;
  double t_end = 1.0;
  int save_every = 10;  // steps between records
  std::uint64_t seed = 0;
  double blow_threshold = 1e4;
  bool keep_fields = true;  // store snapshots (deviation tracks don't need them)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> fields;
  std::vector<double> deviation;               // per record, when tracked
  std::vector<Eigen::VectorXd> phase_coords;   // per record, when tracked
  bool blew_up = false;
  double blow_time = 0.0;
  std::uint64_t seed = 0;
};

/// Optional per-record observer: returns (deviation, phase coords).
using DeviationTracker =
    std::function<std::pair<double, Eigen::VectorXd>(double t, const Field& u)>;

/// One semi-implicit Euler-Maruyama step.
Field sim_step(const Model& model, const SemiImplicitStepper& stepper, const NoiseSpec& noise,
               const Field& u, double t, std::mt19937_64& rng);

/// Runs the step loop from u0, recording every save_every steps. Blow-up
/// (sup-norm past blow_threshold) terminates the trajectory early with the
/// flag set; nothing is recorded after the blow time.
Trajectory simulate(const SimConfig& cfg, const Field& u0,
                    const DeviationTracker& tracker = nullptr);

/// Mild linearized evolution along the pattern: steps dv = Lv dt + noise
/// (evaluated along the pattern) in the comoving frame, then maps each
/// snapshot to the stationary frame through the group action.
Trajectory linearized_solution(const Pattern& p, const Field& v0, const NoiseSpec& noise,
                               double t_end, double dt, int save_every, std::uint64_t seed);

/// ||z(t)|| time series of the expansion remainder z = u - uhat - v, where
/// traj and lin must share times and seed. When `baseline` is given it is
/// used as uhat (a scheme-consistent zero-perturbation run); otherwise uhat
/// is the exact group motion of the profile.
std::vector<double> expansion_residual(const Trajectory& traj, const Trajectory& lin,
                                       const Pattern& p,
                                       const Trajectory* baseline = nullptr);

}  // namespace orbitrack

#endif  // ORBITRACK_SIM_HPP
