#ifndef ORBITRACK_GUESS_HPP
#define ORBITRACK_GUESS_HPP

#include <memory>
#include <utility>

#include "orbitrack/field.hpp"
#include "orbitrack/model.hpp"

// Built-in initial guesses for the profile solver.

namespace orbitrack {

/// The classical bistable front shape 1/(1+e^{x/sqrt(2)}) (component 0).
Field nagumo_front_guess(const Grid& grid);

/// Develops a travelling pulse by integrating the deterministic equation from
/// a seeded excitation with a refractory tail, then recenters the peak to the
/// origin. Deterministic and seed-free.
Field fhn_pulse_guess(std::shared_ptr<Model> model, const Grid& grid,
                      double t_relax = 100.0, double dt = 4e-3);

/// Ring-shaped vortex ansatz A(r) (cos th, sin th) with plateau amplitude from
/// the model's reaction balance.
Field vortex_guess(const Model& model, const Grid& grid, double radius = 3.0, double width = 1.0);

/// Relaxes the ring ansatz on a coarse grid until it settles into a rotating
/// wave, band-limits it up to the target grid, and estimates the rotation
/// speed from the gauge drift. Returns (field, omega estimate).
std::pair<Field, double> vortex_relaxed_guess(std::shared_ptr<Model> model, const Grid& grid,
                                              int coarse_points = 128, double t_relax = 120.0,
                                              double radius = 2.8, double width = 1.0);

}  // namespace orbitrack

#endif  // ORBITRACK_GUESS_HPP
