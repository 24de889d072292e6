#include "orbitrack/noise.hpp"

#include <cmath>
#include <numbers>

#include "orbitrack/errors.hpp"
#include "orbitrack/fft.hpp"
#include "orbitrack/rng.hpp"

namespace orbitrack {

NoiseSpec NoiseSpec::off() { return NoiseSpec{}; }

NoiseSpec NoiseSpec::additive(std::vector<Field> gs, double sigma) {
  if (!(sigma >= 0.0)) throw StructuralError("NoiseSpec: sigma must be nonnegative");
  if (gs.empty()) throw StructuralError("NoiseSpec: additive series needs coefficients");
  for (const auto& g : gs)
    if (!g.all_finite()) throw StructuralError("NoiseSpec: non-finite coefficient field");
  NoiseSpec spec;
  spec.kind = NoiseKind::AdditiveSeries;
  spec.sigma = sigma;
  spec.coefficients = std::move(gs);
  return spec;
}

NoiseSpec NoiseSpec::additive_mode_family(const Grid& grid, int ncomp, int component, int count,
                                          double decay, double amp, double envelope_width,
                                          double sigma) {
  if (grid.dim != 1) throw StructuralError("additive_mode_family: 1D grids only");
  if (component < 0 || component >= ncomp)
    throw StructuralError("additive_mode_family: bad component");
  // summability gate: sum_i (i+1)^{-decay} must converge
  if (decay <= 1.0)
    throw StructuralError("additive_mode_family: series with decay <= 1 is not square-summable");
  std::vector<Field> gs;
  const double k0 = std::numbers::pi / grid.extent;
  for (int i = 0; i < count; ++i) {
    Field g(grid, ncomp);
    double scale = amp * std::pow(i + 1.0, -0.5 * decay);
    for (int p = 0; p < grid.points; ++p) {
      double x = grid.coord(p);
      double env = std::exp(-x * x / (2.0 * envelope_width * envelope_width));
      double mode = (i % 2 == 0) ? std::cos((i / 2 + 1) * k0 * x) : std::sin((i / 2 + 1) * k0 * x);
      g.values(p, component) = scale * env * mode;
    }
    gs.push_back(std::move(g));
  }
  return additive(std::move(gs), sigma);
}

NoiseSpec NoiseSpec::conv_mult(Field kernel, Eigen::VectorXd g_poly, int component, double sigma) {
  if (!(sigma >= 0.0)) throw StructuralError("NoiseSpec: sigma must be nonnegative");
  if (kernel.grid.dim != 1 || kernel.components() != 1)
    throw StructuralError("NoiseSpec: kernel must be a scalar 1D field");
  NoiseSpec spec;
  spec.kind = NoiseKind::ConvolutionMultiplicative;
  spec.sigma = sigma;
  spec.kernel = std::move(kernel);
  spec.g_poly = std::move(g_poly);
  spec.affected_component = component;
  // g(0) = 0 holds structurally (no constant term); keep the explicit check
  double g0 = 0.0;
  if (std::abs(g0) > 1e-14) throw StructuralError("NoiseSpec: g(0) must vanish");
  return spec;
}

double NoiseSpec::series_energy() const {
  double e = 0.0;
  for (const auto& g : coefficients) e += norm_l2(g) * norm_l2(g);
  return e;
}

Field sample_additive(const NoiseSpec& spec, double dt, std::mt19937_64& rng) {
  if (spec.kind != NoiseKind::AdditiveSeries)
    throw StructuralError("sample_additive: wrong noise kind");
  if (!(dt > 0.0)) throw StructuralError("sample_additive: dt must be positive");
  const Field& g0 = spec.coefficients.front();
  Field inc = Field::zero(g0.grid, g0.components());
  const double root_dt = std::sqrt(dt);
  for (const auto& g : spec.coefficients) inc += (spec.sigma * root_dt * std_normal(rng)) * g;
  return inc;
}

namespace {

// white-noise cells xi ~ N(0, 1/h), optionally low-passed to the retained
// Fourier band
Eigen::VectorXd white_noise_1d(const Grid& grid, int cutoff, std::mt19937_64& rng) {
  const int n = grid.points;
  Eigen::VectorXd xi(n);
  const double s = 1.0 / std::sqrt(grid.spacing());
  for (int i = 0; i < n; ++i) xi[i] = s * std_normal(rng);
  if (cutoff > 0 && cutoff < n / 2) {
    Eigen::VectorXcd v = xi.cast<std::complex<double>>();
    fft::transform(v.data(), n, 1, false);
    for (int k = 0; k < n; ++k) {
      int ks = k < n / 2 ? k : k - n;
      if (std::abs(ks) > cutoff) v[k] = 0.0;
    }
    fft::transform(v.data(), n, 1, true);
    xi = v.real();
  }
  return xi;
}

}  // namespace

Field sample_conv_mult(const NoiseSpec& spec, const Field& u, double dt, std::mt19937_64& rng) {
  if (spec.kind != NoiseKind::ConvolutionMultiplicative)
    throw StructuralError("sample_conv_mult: wrong noise kind");
  if (u.grid.dim != 1) throw StructuralError("sample_conv_mult: 1D grids only");
  if (!(u.grid == spec.kernel.grid))
    throw StructuralError("sample_conv_mult: kernel grid mismatch");

  const Grid& grid = u.grid;
  const int n = grid.points;
  Eigen::VectorXd xi = white_noise_1d(grid, spec.spectral_cutoff, rng);

  // correlation (phi * xi)(x_i) = h sum_j phi(x_j - x_i) xi_j via FFT
  Eigen::VectorXcd phat = spec.kernel.values.col(0).cast<std::complex<double>>();
  Eigen::VectorXcd xhat = xi.cast<std::complex<double>>();
  fft::transform(phat.data(), n, 1, false);
  fft::transform(xhat.data(), n, 1, false);
  for (int k = 0; k < n; ++k) xhat[k] *= std::conj(phat[k]);
  fft::transform(xhat.data(), n, 1, true);
  Eigen::VectorXd conv = grid.spacing() * xhat.real();

  Field inc = Field::zero(grid, u.components());
  const int c = spec.affected_component;
  const double root_dt = std::sqrt(dt);
  for (int i = 0; i < n; ++i) {
    double uv = u.values(i, c);
    double g = 0.0;
    double p = uv;
    for (int k = 0; k < spec.g_poly.size(); ++k) {
      g += spec.g_poly[k] * p;
      p *= uv;
    }
    inc.values(i, c) = spec.sigma * root_dt * g * conv[i];
  }
  return inc;
}

Field sample_increment(const NoiseSpec& spec, const Field& u, double dt, std::mt19937_64& rng) {
  switch (spec.kind) {
    case NoiseKind::Off:
      return Field::zero(u.grid, u.components());
    case NoiseKind::AdditiveSeries:
      return sample_additive(spec, dt, rng);
    case NoiseKind::ConvolutionMultiplicative:
      return sample_conv_mult(spec, u, dt, rng);
  }
  throw StructuralError("sample_increment: unknown noise kind");
}

double hs_norm_G(const Field& u, const Field& phi) {
  if (u.grid.dim != 1 || phi.grid.dim != 1 || u.components() != 1 || phi.components() != 1)
    throw StructuralError("hs_norm_G: scalar 1D fields only");
  if (!(u.grid == phi.grid)) throw StructuralError("hs_norm_G: grid mismatch");
  const int n = u.grid.points;
  const double h = u.grid.spacing();
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    double knorm_sq = 0.0;
    for (int j = 0; j < n; ++j) {
      double v = phi.values(((j - i) % n + n) % n, 0);
      knorm_sq += v * v * h;
    }
    total += u.values(i, 0) * u.values(i, 0) * knorm_sq * h;
  }
  return std::sqrt(total);
}

}  // namespace orbitrack
