#ifndef ORBITRACK_FFT_HPP
#define ORBITRACK_FFT_HPP

#include <Eigen/Core>
#include <complex>

// Minimal radix-2 FFT for periodic grids. Grid sizes are powers of two by
// construction, so this covers every transform in the project with pure,
// thread-safe functions (no planner state shared across threads).

namespace orbitrack::fft {

/// In-place complex FFT of length n = 2^k over a strided buffer.
/// The inverse transform includes the 1/n scaling.
void transform(std::complex<double>* data, int n, int stride, bool inverse);

Eigen::VectorXcd forward(const Eigen::VectorXcd& v);
Eigen::VectorXcd inverse(const Eigen::VectorXcd& v);

/// 2D transforms on an n x n matrix (rows first, then columns).
void forward2(Eigen::MatrixXcd& m);
void inverse2(Eigen::MatrixXcd& m);

/// Angular wavenumbers xi_j = (pi/L) * j_signed for a grid of n cells on
/// [-L, L), with j_signed in [-n/2, n/2).
Eigen::ArrayXd wavenumbers(int n, double half_width);

/// Same but with the Nyquist entry zeroed; used for odd-order derivatives so
/// real fields stay real.
Eigen::ArrayXd wavenumbers_odd(int n, double half_width);

}  // namespace orbitrack::fft

#endif  // ORBITRACK_FFT_HPP
