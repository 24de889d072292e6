#include "orbitrack/fft.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "orbitrack/errors.hpp"

namespace orbitrack::fft {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Twiddle factors for half a period, cached per size. thread_local keeps the
// cache write-free across threads.
const std::vector<std::complex<double>>& twiddles(int n) {
  thread_local int cached_n = 0;
  thread_local std::vector<std::complex<double>> w;
  if (cached_n != n) {
    w.resize(n / 2);
    for (int k = 0; k < n / 2; ++k) {
      double phase = -2.0 * std::numbers::pi * k / n;
      w[k] = {std::cos(phase), std::sin(phase)};
    }
    cached_n = n;
  }
  return w;
}

}  // namespace

void transform(std::complex<double>* data, int n, int stride, bool inverse) {
  if (!is_pow2(n)) throw StructuralError("fft: length must be a power of two");
  if (n == 1) return;

  // Bit-reversal permutation.
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }

  const auto& w = twiddles(n);
  for (int len = 2; len <= n; len <<= 1) {
    int step = n / len;
    for (int i = 0; i < n; i += len) {
      for (int k = 0; k < len / 2; ++k) {
        std::complex<double> tw = w[k * step];
        if (inverse) tw = std::conj(tw);
        std::complex<double>& a = data[(i + k) * stride];
        std::complex<double>& b = data[(i + k + len / 2) * stride];
        std::complex<double> t = b * tw;
        b = a - t;
        a += t;
      }
    }
  }

  if (inverse) {
    double scale = 1.0 / n;
    for (int i = 0; i < n; ++i) data[i * stride] *= scale;
  }
}

Eigen::VectorXcd forward(const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out = v;
  transform(out.data(), static_cast<int>(out.size()), 1, false);
  return out;
}

Eigen::VectorXcd inverse(const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out = v;
  transform(out.data(), static_cast<int>(out.size()), 1, true);
  return out;
}

void forward2(Eigen::MatrixXcd& m) {
  const int n = static_cast<int>(m.rows());
  for (int r = 0; r < n; ++r) transform(m.data() + r, n, n, false);
  for (int c = 0; c < n; ++c) transform(m.data() + c * n, n, 1, false);
}

void inverse2(Eigen::MatrixXcd& m) {
  const int n = static_cast<int>(m.rows());
  for (int r = 0; r < n; ++r) transform(m.data() + r, n, n, true);
  for (int c = 0; c < n; ++c) transform(m.data() + c * n, n, 1, true);
}

Eigen::ArrayXd wavenumbers(int n, double half_width) {
  Eigen::ArrayXd xi(n);
  const double base = std::numbers::pi / half_width;
  for (int j = 0; j < n; ++j) {
    int js = j < n / 2 ? j : j - n;
    xi[j] = base * js;
  }
  return xi;
}

Eigen::ArrayXd wavenumbers_odd(int n, double half_width) {
  Eigen::ArrayXd xi = wavenumbers(n, half_width);
  xi[n / 2] = 0.0;
  return xi;
}

}  // namespace orbitrack::fft
