#include "orbitrack/field.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "orbitrack/errors.hpp"
#include "orbitrack/fft.hpp"

namespace orbitrack {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

using Cplx = std::complex<double>;

}  // namespace

Grid::Grid(int dim_, double extent_, int points_) : dim(dim_), extent(extent_), points(points_) {
  if (dim != 1 && dim != 2) throw StructuralError("Grid: dim must be 1 or 2");
  if (!(extent > 0.0)) throw StructuralError("Grid: extent must be positive");
  if (points < 8 || !is_pow2(points))
    throw StructuralError("Grid: points must be a power of two, at least 8");
}

Eigen::ArrayXd Grid::axis_coords() const {
  Eigen::ArrayXd x(points);
  for (int i = 0; i < points; ++i) x[i] = coord(i);
  return x;
}

Field::Field(const Grid& g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
  if (values.rows() != grid.total_points())
    throw StructuralError("Field: value rows do not match the grid");
}

Field& Field::operator+=(const Field& o) {
  if (!(grid == o.grid) || components() != o.components())
    throw StructuralError("Field: mismatched operands");
  values += o.values;
  return *this;
}

Field& Field::operator-=(const Field& o) {
  if (!(grid == o.grid) || components() != o.components())
    throw StructuralError("Field: mismatched operands");
  values -= o.values;
  return *this;
}

Field& Field::operator*=(double s) {
  values *= s;
  return *this;
}

Eigen::VectorXd Field::flat() const {
  return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

Field Field::from_flat(const Grid& g, int components, const Eigen::VectorXd& v) {
  if (v.size() != static_cast<Eigen::Index>(g.total_points()) * components)
    throw StructuralError("Field: flat vector has wrong size");
  Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(v.data(), g.total_points(), components);
  return Field(g, std::move(m));
}

// ---------------------------------------------------------------------------
// Norms and inner products
// ---------------------------------------------------------------------------

namespace {

double cell_measure(const Grid& g) {
  double h = g.spacing();
  return g.dim == 1 ? h : h * h;
}

// Sum over Fourier modes of (1+|xi|^2)^s |fhat|^2, discrete Parseval form.
double bessel_norm_sq(const Field& f, double s) {
  const Grid& g = f.grid;
  const int n = g.points;
  const double measure = cell_measure(g) / g.total_points();
  double total = 0.0;
  if (g.dim == 1) {
    Eigen::ArrayXd xi = fft::wavenumbers(n, g.extent);
    for (int c = 0; c < f.components(); ++c) {
      Eigen::VectorXcd v = f.values.col(c).cast<Cplx>();
      fft::transform(v.data(), n, 1, false);
      for (int k = 0; k < n; ++k)
        total += std::pow(1.0 + xi[k] * xi[k], s) * std::norm(v[k]) * measure;
    }
  } else {
    Eigen::ArrayXd xi = fft::wavenumbers(n, g.extent);
    for (int c = 0; c < f.components(); ++c) {
      Eigen::MatrixXcd v =
          Eigen::Map<const Eigen::MatrixXd>(f.values.col(c).data(), n, n).cast<Cplx>();
      // row-major point layout: row index = ix, column index = iy
      fft::forward2(v);
      for (int k2 = 0; k2 < n; ++k2)
        for (int k1 = 0; k1 < n; ++k1) {
          double xisq = xi[k1] * xi[k1] + xi[k2] * xi[k2];
          total += std::pow(1.0 + xisq, s) * std::norm(v(k1, k2)) * measure;
        }
    }
  }
  return total;
}

}  // namespace

double norm(const Field& f, const NormSpec& spec) {
  switch (spec.kind) {
    case NormKind::Sup:
      return f.values.cwiseAbs().maxCoeff();
    case NormKind::Lp: {
      double p = spec.param;
      if (!(p >= 1.0) || !std::isfinite(p))
        throw StructuralError("norm: Lp requires p in [1,inf)");
      double s = (f.values.array().abs().pow(p)).sum() * cell_measure(f.grid);
      return std::pow(s, 1.0 / p);
    }
    case NormKind::Hk: {
      double k = spec.param;
      if (!(k >= 0.0) || k != std::floor(k))
        throw StructuralError("norm: Hk requires a nonnegative integer k");
      return std::sqrt(bessel_norm_sq(f, k));
    }
    case NormKind::Hs2: {
      double s = spec.param;
      if (!(s >= 0.0)) throw StructuralError("norm: Hs2 requires s >= 0");
      return std::sqrt(bessel_norm_sq(f, s));
    }
  }
  throw StructuralError("norm: unknown kind");
}

double norm_l2(const Field& f) {
  return std::sqrt(f.values.squaredNorm() * cell_measure(f.grid));
}

double norm_sup(const Field& f) { return f.values.cwiseAbs().maxCoeff(); }

double inner(const Field& f, const Field& g) {
  if (!(f.grid == g.grid) || f.components() != g.components())
    throw StructuralError("inner: mismatched fields");
  return (f.values.array() * g.values.array()).sum() * cell_measure(f.grid);
}

// ---------------------------------------------------------------------------
// Fourier multipliers and derivatives
// ---------------------------------------------------------------------------

Field apply_symbol(const Field& f, const SymbolFn& gain) {
  const Grid& g = f.grid;
  const int n = g.points;
  Field out(g, f.components());
  if (g.dim == 1) {
    Eigen::ArrayXd xi1 = fft::wavenumbers_odd(n, g.extent);
    Eigen::ArrayXd xi = fft::wavenumbers(n, g.extent);
    for (int c = 0; c < f.components(); ++c) {
      Eigen::VectorXcd v = f.values.col(c).cast<Cplx>();
      fft::transform(v.data(), n, 1, false);
      for (int k = 0; k < n; ++k) v[k] *= gain(xi1[k], 0.0, xi[k] * xi[k], c);
      fft::transform(v.data(), n, 1, true);
      out.values.col(c) = v.real();
    }
  } else {
    Eigen::ArrayXd xio = fft::wavenumbers_odd(n, g.extent);
    Eigen::ArrayXd xi = fft::wavenumbers(n, g.extent);
    for (int c = 0; c < f.components(); ++c) {
      Eigen::MatrixXcd v =
          Eigen::Map<const Eigen::MatrixXd>(f.values.col(c).data(), n, n).cast<Cplx>();
      fft::forward2(v);
      for (int k2 = 0; k2 < n; ++k2)
        for (int k1 = 0; k1 < n; ++k1) {
          double xisq = xi[k1] * xi[k1] + xi[k2] * xi[k2];
          v(k1, k2) *= gain(xio[k1], xio[k2], xisq, c);
        }
      fft::inverse2(v);
      Eigen::MatrixXd re = v.real();
      out.values.col(c) = Eigen::Map<const Eigen::VectorXd>(re.data(), re.size());
    }
  }
  return out;
}

Field derivative(const Field& f, int axis) {
  if (axis < 0 || axis >= f.grid.dim) throw StructuralError("derivative: bad axis");
  const Cplx i_unit(0.0, 1.0);
  return apply_symbol(f, [axis, i_unit](double xi1, double xi2, double, int) {
    return i_unit * (axis == 0 ? xi1 : xi2);
  });
}

Field spectral_upsample(const Field& f, int new_points) {
  const Grid& g = f.grid;
  if (new_points < g.points || !is_pow2(new_points))
    throw StructuralError("spectral_upsample: new_points must be a larger power of two");
  if (new_points == g.points) return f;
  Grid g2(g.dim, g.extent, new_points);
  Field out(g2, f.components());
  const int n = g.points, n2 = new_points;
  const double scale = g.dim == 1 ? static_cast<double>(n2) / n
                                  : static_cast<double>(n2) * n2 / (static_cast<double>(n) * n);
  for (int c = 0; c < f.components(); ++c) {
    if (g.dim == 1) {
      Eigen::VectorXcd v = f.values.col(c).cast<Cplx>();
      fft::transform(v.data(), n, 1, false);
      Eigen::VectorXcd w = Eigen::VectorXcd::Zero(n2);
      for (int k = 0; k < n; ++k) {
        int ks = k < n / 2 ? k : k - n;
        w[(ks + n2) % n2] = v[k];
      }
      w[n / 2] *= 0.5;  // split the self-conjugate Nyquist mode
      w[n2 - n / 2] += w[n / 2];
      fft::transform(w.data(), n2, 1, true);
      out.values.col(c) = scale * w.real();
    } else {
      Eigen::MatrixXcd v =
          Eigen::Map<const Eigen::MatrixXd>(f.values.col(c).data(), n, n).cast<Cplx>();
      fft::forward2(v);
      Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(n2, n2);
      auto mapk = [&](int k) {
        int ks = k < n / 2 ? k : k - n;
        return (ks + n2) % n2;
      };
      for (int k2 = 0; k2 < n; ++k2)
        for (int k1 = 0; k1 < n; ++k1) {
          double w1 = k1 == n / 2 ? 0.5 : 1.0;
          double w2 = k2 == n / 2 ? 0.5 : 1.0;
          // split self-conjugate rows/columns across both images
          for (int i1 : (k1 == n / 2 ? std::vector<int>{n / 2, n2 - n / 2}
                                     : std::vector<int>{mapk(k1)}))
            for (int i2 : (k2 == n / 2 ? std::vector<int>{n / 2, n2 - n / 2}
                                       : std::vector<int>{mapk(k2)}))
              w(i1, i2) += w1 * w2 * v(k1, k2);
        }
      fft::inverse2(w);
      Eigen::MatrixXd re = scale * w.real();
      out.values.col(c) = Eigen::Map<const Eigen::VectorXd>(re.data(), re.size());
    }
  }
  return out;
}

Field scaled_laplacian(const Field& f, const Eigen::VectorXd& diffusion) {
  if (diffusion.size() != f.components())
    throw StructuralError("scaled_laplacian: diffusion size mismatch");
  return apply_symbol(f, [&diffusion](double, double, double xisq, int c) {
    return Cplx(-diffusion[c] * xisq, 0.0);
  });
}

// ---------------------------------------------------------------------------
// Group action
// ---------------------------------------------------------------------------

namespace {

int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

// out[i] = in[i - shift] (periodic), i.e. translation by `shift` cells.
Eigen::VectorXd roll_1d(const Eigen::VectorXd& in, int shift) {
  const int n = static_cast<int>(in.size());
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = in[wrap(i - shift, n)];
  return out;
}

// Spectral phase shift by physical offset a (exact for band-limited data;
// the self-conjugate Nyquist mode gets the real part of its phase).
void phase_shift_inplace(Eigen::VectorXcd& vhat, const Eigen::ArrayXd& xi, double a) {
  const int n = static_cast<int>(vhat.size());
  for (int k = 0; k < n; ++k) {
    if (k == n / 2) {
      vhat[k] *= std::cos(xi[k] * a);
    } else {
      vhat[k] *= Cplx(std::cos(xi[k] * a), -std::sin(xi[k] * a));
    }
  }
}

Field translate_spectral_1d(const Field& f, double a) {
  const int n = f.grid.points;
  Eigen::ArrayXd xi = fft::wavenumbers(n, f.grid.extent);
  Field out(f.grid, f.components());
  for (int c = 0; c < f.components(); ++c) {
    Eigen::VectorXcd v = f.values.col(c).cast<Cplx>();
    fft::transform(v.data(), n, 1, false);
    phase_shift_inplace(v, xi, a);
    fft::transform(v.data(), n, 1, true);
    out.values.col(c) = v.real();
  }
  return out;
}

Field translate_spectral_2d(const Field& f, double a1, double a2) {
  const int n = f.grid.points;
  Eigen::ArrayXd xi = fft::wavenumbers(n, f.grid.extent);
  Field out(f.grid, f.components());
  for (int c = 0; c < f.components(); ++c) {
    Eigen::MatrixXcd v =
        Eigen::Map<const Eigen::MatrixXd>(f.values.col(c).data(), n, n).cast<Cplx>();
    fft::forward2(v);
    for (int k2 = 0; k2 < n; ++k2)
      for (int k1 = 0; k1 < n; ++k1) {
        double p1c = (k1 == n / 2) ? std::cos(xi[k1] * a1) : 0.0;
        double p2c = (k2 == n / 2) ? std::cos(xi[k2] * a2) : 0.0;
        Cplx m1 = (k1 == n / 2) ? Cplx(p1c, 0.0)
                                : Cplx(std::cos(xi[k1] * a1), -std::sin(xi[k1] * a1));
        Cplx m2 = (k2 == n / 2) ? Cplx(p2c, 0.0)
                                : Cplx(std::cos(xi[k2] * a2), -std::sin(xi[k2] * a2));
        v(k1, k2) *= m1 * m2;
      }
    fft::inverse2(v);
    Eigen::MatrixXd re = v.real();
    out.values.col(c) = Eigen::Map<const Eigen::VectorXd>(re.data(), re.size());
  }
  return out;
}

// Interpolating cubic B-spline weights for fractional offset u in [0,1),
// taps at base-1 .. base+2.
void cubic_weights(double u, double w[4]) {
  double v = 1.0 - u;
  w[0] = v * v * v / 6.0;
  w[1] = 2.0 / 3.0 - u * u + 0.5 * u * u * u;
  w[2] = 2.0 / 3.0 - v * v + 0.5 * v * v * v;
  w[3] = u * u * u / 6.0;
}

// Periodic prefilter turning samples into B-spline coefficients: divide the
// 2D spectrum by the transform of the [1/6, 4/6, 1/6] kernel along each axis.
Eigen::MatrixXd bspline_coeffs_2d(const Eigen::Map<const Eigen::MatrixXd>& samples) {
  const int n = static_cast<int>(samples.rows());
  Eigen::ArrayXd kernel(n);
  for (int j = 0; j < n; ++j)
    kernel[j] = (4.0 + 2.0 * std::cos(2.0 * std::numbers::pi * j / n)) / 6.0;
  Eigen::MatrixXcd v = samples.cast<Cplx>();
  fft::forward2(v);
  for (int k2 = 0; k2 < n; ++k2)
    for (int k1 = 0; k1 < n; ++k1) v(k1, k2) /= kernel[k1] * kernel[k2];
  fft::inverse2(v);
  return v.real();
}

// Samples a B-spline coefficient grid at physical point (y1,y2), periodic.
double bicubic_sample(const Eigen::MatrixXd& coeff, const Grid& g, double y1, double y2) {
  const int n = g.points;
  const double h = g.spacing();
  double s1 = (y1 + g.extent) / h;
  double s2 = (y2 + g.extent) / h;
  int i1 = static_cast<int>(std::floor(s1));
  int i2 = static_cast<int>(std::floor(s2));
  double u1 = s1 - i1;
  double u2 = s2 - i2;
  double w1[4], w2[4];
  cubic_weights(u1, w1);
  cubic_weights(u2, w2);
  double acc = 0.0;
  for (int b = 0; b < 4; ++b) {
    int iy = wrap(i2 - 1 + b, n);
    double row = 0.0;
    for (int a = 0; a < 4; ++a) {
      int ix = wrap(i1 - 1 + a, n);
      row += w1[a] * coeff(ix, iy);
    }
    acc += w2[b] * row;
  }
  return acc;
}

bool near_integer(double x, double tol, int* out) {
  double r = std::round(x);
  if (std::abs(x - r) <= tol) {
    *out = static_cast<int>(r);
    return true;
  }
  return false;
}

}  // namespace

Field act(const GroupElement& g, const Field& f) {
  const Grid& grid = f.grid;
  const int d = space_dim(g.kind);
  if (d != grid.dim) throw StructuralError("act: group and field dimensions differ");

  if (grid.dim == 1) {
    double a = g.translation()[0];
    int cells = 0;
    if (near_integer(a / grid.spacing(), 1e-12 * std::max(1.0, std::abs(a / grid.spacing())),
                     &cells)) {
      Field out(grid, f.components());
      for (int c = 0; c < f.components(); ++c)
        out.values.col(c) = roll_1d(f.values.col(c), cells);
      return out;
    }
    return translate_spectral_1d(f, a);
  }

  // 2D: SE(2) element with rotation angle theta and translation t.
  const double theta = g.rotation_angle();
  const Eigen::VectorXd t = g.translation();
  const int n = grid.points;
  const double h = grid.spacing();

  double quarter = theta / (std::numbers::pi / 2.0);
  int qturns = 0;
  bool lattice_rotation = near_integer(quarter, 1e-12, &qturns);
  int c1 = 0, c2 = 0;
  bool whole_cell = near_integer(t[0] / h, 1e-12 * std::max(1.0, std::abs(t[0] / h)), &c1) &&
                    near_integer(t[1] / h, 1e-12 * std::max(1.0, std::abs(t[1] / h)), &c2);

  if (lattice_rotation && wrap(qturns, 4) == 0 && whole_cell) {
    // pure whole-cell translation: index permutation
    Field out(grid, f.components());
    for (int c = 0; c < f.components(); ++c) {
      const double* src = f.values.col(c).data();
      double* dst = out.values.col(c).data();
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
          dst[iy * n + ix] = src[wrap(iy - c2, n) * n + wrap(ix - c1, n)];
    }
    return out;
  }

  if (lattice_rotation && wrap(qturns, 4) == 0) {
    return translate_spectral_2d(f, t[0], t[1]);
  }

  if (lattice_rotation && whole_cell) {
    // quarter turn + whole-cell shift: g^{-1}x lands on the lattice exactly
    int q = wrap(qturns, 4);
    // R_{-theta} for theta = q*pi/2: columns are images of unit vectors
    const int rots[4][4] = {{1, 0, 0, 1}, {0, -1, 1, 0}, {-1, 0, 0, -1}, {0, 1, -1, 0}};
    // entries of R_{theta}: [r00 r01; r10 r11]
    int r00 = rots[q][0], r01 = rots[q][1], r10 = rots[q][2], r11 = rots[q][3];
    Field out(grid, f.components());
    // index of origin: coord(i) = -L + i*h, origin at i0 = n/2
    const int i0 = n / 2;
    for (int c = 0; c < f.components(); ++c) {
      const double* src = f.values.col(c).data();
      double* dst = out.values.col(c).data();
      for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix) {
          // source index = R_{-theta} * (x - t) in lattice units about i0
          int dx = ix - c1 - i0;
          int dy = iy - c2 - i0;
          int sx = r00 * dx + r10 * dy;  // R_{-theta} = R_{theta}^T
          int sy = r01 * dx + r11 * dy;
          dst[iy * n + ix] = src[wrap(sy + i0, n) * n + wrap(sx + i0, n)];
        }
    }
    return out;
  }

  // general motion: cubic-spline resample of f at R_{-theta}(x - t)
  const double ct = std::cos(theta), st = std::sin(theta);
  Field out(grid, f.components());
  Eigen::ArrayXd coords = grid.axis_coords();
  for (int c = 0; c < f.components(); ++c) {
    Eigen::Map<const Eigen::MatrixXd> samples(f.values.col(c).data(), n, n);
    Eigen::MatrixXd coeff = bspline_coeffs_2d(samples);
    double* dst = out.values.col(c).data();
    for (int iy = 0; iy < n; ++iy) {
      double x2 = coords[iy] - t[1];
      for (int ix = 0; ix < n; ++ix) {
        double x1 = coords[ix] - t[0];
        double y1 = ct * x1 + st * x2;
        double y2 = -st * x1 + ct * x2;
        dst[iy * n + ix] = bicubic_sample(coeff, grid, y1, y2);
      }
    }
  }
  return out;
}

Field infinitesimal_act(const AlgebraElement& y, const Field& f) {
  const int d = space_dim(y.kind);
  if (d != f.grid.dim) throw StructuralError("infinitesimal_act: dimension mismatch");

  if (y.kind == GroupKind::Translation1D) {
    double a = y.coords[0];
    if (a == 0.0) return Field::zero(f.grid, f.components());
    Field df = derivative(f, 0);
    return -a * df;
  }

  double a = y.coords[0], b = y.coords[1], w = y.coords[2];
  Field out = Field::zero(f.grid, f.components());
  if (a == 0.0 && b == 0.0 && w == 0.0) return out;
  Field d1 = derivative(f, 0);
  Field d2 = derivative(f, 1);
  const int n = f.grid.points;
  Eigen::ArrayXd coords = f.grid.axis_coords();
  for (int c = 0; c < f.components(); ++c) {
    double* dst = out.values.col(c).data();
    const double* p1 = d1.values.col(c).data();
    const double* p2 = d2.values.col(c).data();
    for (int iy = 0; iy < n; ++iy) {
      double x2 = coords[iy];
      for (int ix = 0; ix < n; ++ix) {
        double x1 = coords[ix];
        int p = iy * n + ix;
        dst[p] = -a * p1[p] - b * p2[p] + w * (x2 * p1[p] - x1 * p2[p]);
      }
    }
  }
  return out;
}

}  // namespace orbitrack
