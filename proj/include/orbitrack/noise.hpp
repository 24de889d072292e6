#ifndef ORBITRACK_NOISE_HPP
#define ORBITRACK_NOISE_HPP

#include <random>
#include <vector>

#include "orbitrack/field.hpp"

// Noise generators: additive series sum_i g_i dbeta_i and translation-
// invariant convolution-multiplicative noise g(u) (phi * dW) driven by
// space-time white noise, plus the Hilbert-Schmidt diagnostics of the
// induced integral operator.

namespace orbitrack {

enum class NoiseKind { Off, AdditiveSeries, ConvolutionMultiplicative };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Off;
  double sigma = 0.0;

  // additive series: time-independent coefficient fields g_i
  std::vector<Field> coefficients;

  // convolution-multiplicative: 1D kernel phi and a polynomial pointwise
  // factor g(u) = sum_k g_poly[k] u^{k+1} (no constant term, so g(0) = 0)
  Field kernel;
  Eigen::VectorXd g_poly;
  int affected_component = 0;

  // number of retained white-noise Fourier modes per sign; 0 keeps the grid's
  // full resolution
  int spectral_cutoff = 0;

  static NoiseSpec off();
  static NoiseSpec additive(std::vector<Field> gs, double sigma);
  /// Family g_i = amp (i+1)^{-decay/2} envelope(x) trig_i(x), i < count, all
  /// on component `component`. Rejects decay <= 1 (divergent series).
  static NoiseSpec additive_mode_family(const Grid& grid, int ncomp, int component, int count,
                                        double decay, double amp, double envelope_width,
                                        double sigma);
  static NoiseSpec conv_mult(Field kernel, Eigen::VectorXd g_poly, int component, double sigma);

  /// sum_i ||g_i||_2^2 for the additive series.
  double series_energy() const;
};

/// sigma sum_i g_i zeta_i sqrt(dt), zeta_i iid standard normal.
Field sample_additive(const NoiseSpec& spec, double dt, std::mt19937_64& rng);

/// sigma g(u) (phi * xi) sqrt(dt) with cell white noise xi ~ N(0, 1/spacing);
/// the convolution is the correlation integral of the kernel, via FFT.
Field sample_conv_mult(const NoiseSpec& spec, const Field& u, double dt, std::mt19937_64& rng);

/// Dispatch on spec.kind (zero field for Off). Draw counts per call depend
/// only on the spec, never on the state, so parallel streams stay aligned.
Field sample_increment(const NoiseSpec& spec, const Field& u, double dt, std::mt19937_64& rng);

/// Discrete Hilbert-Schmidt norm of f -> u(x) integral phi(y-x) f(y) dy on
/// the periodic grid, evaluated from the shifted-kernel definition.
double hs_norm_G(const Field& u, const Field& phi);

}  // namespace orbitrack

#endif  // ORBITRACK_NOISE_HPP
