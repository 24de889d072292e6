#ifndef ORBITRACK_IO_HPP
#define ORBITRACK_IO_HPP

#include <filesystem>
#include <string>

#include "orbitrack/pattern.hpp"
#include "orbitrack/sim.hpp"

// File formats: field snapshots as CSV (header x[,y],comp0[,comp1,...],
// row-major over grid points, %.17g), pattern directories with meta.json,
// trajectory CSVs.

namespace orbitrack {

std::string format_g17(double v);

void write_field_csv(const std::filesystem::path& path, const Field& f);

/// Reads a field written by write_field_csv; the grid must be supplied (the
/// coordinates in the file are validated against it).
Field read_field_csv(const std::filesystem::path& path, const Grid& grid, int components);

/// Pattern directory: meta.json (parameters, X coords, residual, eigenvalues,
/// constants) plus ustar.csv, tangent<i>.csv, adjoint<i>.csv.
void save_pattern(const std::filesystem::path& dir, const Pattern& p);
Pattern load_pattern(const std::filesystem::path& dir);

/// traj.csv: t, deviation, phase coords (when present).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t);

}  // namespace orbitrack

#endif  // ORBITRACK_IO_HPP
