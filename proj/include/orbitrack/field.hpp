#ifndef ORBITRACK_FIELD_HPP
#define ORBITRACK_FIELD_HPP

#include <Eigen/Core>
#include <functional>

#include "orbitrack/lie.hpp"

// Vector-valued fields sampled on a periodic rectangular grid [-L,L)^dim,
// the group action Pi(g), the infinitesimal action pi(Y), and the grid norms.

namespace orbitrack {

/// Periodic grid: `points` cells per axis (a power of two, at least 8) on
/// the box [-extent, extent)^dim with wrap-around indexing.
struct Grid {
  int dim = 1;
  double extent = 1.0;
  int points = 8;

  Grid() = default;
  Grid(int dim_, double extent_, int points_);

  double spacing() const { return 2.0 * extent / points; }
  int total_points() const { return dim == 1 ? points : points * points; }
  /// Physical coordinate of cell i along one axis.
  double coord(int i) const { return -extent + i * spacing(); }
  /// All axis coordinates.
  Eigen::ArrayXd axis_coords() const;

  bool operator==(const Grid& o) const {
    return dim == o.dim && extent == o.extent && points == o.points;
  }
};

/// Field on a grid with one column per component. The linear point index is
/// row-major over grid points: in 2D, p = iy * points + ix (x fastest).
struct Field {
  Grid grid;
  Eigen::MatrixXd values;  // total_points x components

  Field() = default;
  Field(const Grid& g, int components)
      : grid(g), values(Eigen::MatrixXd::Zero(g.total_points(), components)) {}
  Field(const Grid& g, Eigen::MatrixXd v);

  int components() const { return static_cast<int>(values.cols()); }
  int size() const { return static_cast<int>(values.size()); }
  bool all_finite() const { return values.allFinite(); }

  static Field zero(const Grid& g, int components) { return Field(g, components); }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double s);
  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field f) { return f *= s; }

  /// Flattened view of all values as one vector (component-major blocks).
  Eigen::VectorXd flat() const;
  static Field from_flat(const Grid& g, int components, const Eigen::VectorXd& v);
};

enum class NormKind { Lp, Hk, Hs2, Sup };

struct NormSpec {
  NormKind kind = NormKind::Lp;
  double param = 2.0;  // p for Lp, k for Hk, s for Hs2; ignored for Sup
  static NormSpec l2() { return {NormKind::Lp, 2.0}; }
};

/// Grid norm. Lp is the Riemann sum over all components; Hk and Hs2 use the
/// Fourier multiplier (1+|xi|^2)^{s/2} (they coincide for integer orders);
/// Sup is the grid maximum (which underestimates between-node maxima).
double norm(const Field& f, const NormSpec& spec);
double norm_l2(const Field& f);
double norm_sup(const Field& f);

/// Riemann-sum L^2 pairing across all components.
double inner(const Field& f, const Field& g);

/// Group action Pi(g)f = f(g^{-1} x). Whole-cell translations and quarter
/// turns are exact index permutations; fractional translations use the FFT
/// phase shift; proper rotations use bicubic interpolation with periodic
/// wrap.
Field act(const GroupElement& g, const Field& f);

/// Infinitesimal action pi(Y)f with spectral derivatives:
/// pi(X1) = -d/dx1, pi(X2) = -d/dx2, pi(X3) = -x1 d/dx2 + x2 d/dx1.
Field infinitesimal_act(const AlgebraElement& y, const Field& f);

/// Spectral partial derivative along one axis (axis 0 = x1, 1 = x2).
Field derivative(const Field& f, int axis);

/// Band-limited refinement onto a grid with more points (same extent):
/// zero-padding in Fourier space. new_points must be a larger power of two.
Field spectral_upsample(const Field& f, int new_points);

/// Spectral Laplacian scaled per component: out_c = diffusion[c] * Lap f_c.
Field scaled_laplacian(const Field& f, const Eigen::VectorXd& diffusion);

/// Fourier multiplier applied per component:
/// out_c = Re ifft( gain(xi1, xi2, |xi|^2, c) * fft(f_c) ).
/// xi1/xi2 have the Nyquist mode zeroed (odd-order symbols stay real);
/// xi_sq keeps the full Nyquist contribution for even-order symbols.
using SymbolFn = std::function<std::complex<double>(double, double, double, int)>;
Field apply_symbol(const Field& f, const SymbolFn& gain);

}  // namespace orbitrack

#endif  // ORBITRACK_FIELD_HPP
