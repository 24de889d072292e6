#ifndef ORBITRACK_MC_HPP
#define ORBITRACK_MC_HPP

#include <vector>

#include "orbitrack/noise.hpp"
#include "orbitrack/pattern.hpp"

// Experiments behind the stability claims: deterministic residual scaling,
// Monte Carlo escape statistics with Wilson intervals, and subgaussian tail
// domination for the scalar stochastic-convolution instance.

namespace orbitrack {

struct EscapeReport {
  double epsilon = 0.0;
  double sigma = 0.0;
  double horizon = 0.0;
  int n_paths = 0;
  int n_escapes = 0;
  double escape_fraction = 0.0;
  double wilson_lo = 0.0;
  double wilson_hi = 1.0;
  std::vector<double> first_escape_times;  // per path; +inf when no escape
  bool degenerate = false;                 // every path blew up
};

struct TailReport {
  std::vector<double> lambda_grid;
  std::vector<double> empirical_survival;
  std::vector<double> bound_values;
  double K = 0.0;
  int violations = 0;
};

struct DetstabReport {
  std::vector<double> eps_list;
  std::vector<double> residuals;      // R(eps)
  std::vector<double> ratios;         // R(eps)/eps
  double linear_coeff = 0.0;          // alpha in R ~ alpha e + beta e^p
  double excess_coeff = 0.0;          // beta
  double excess_exponent = 0.0;       // p
  double decay_floor = 0.0;           // M3 exp(-aT)
};

/// 95% Wilson score interval for successes out of n.
std::pair<double, double> wilson_interval(int successes, int n);

/// P(X > lambda) <= e exp(-lambda^2 / (2 e K^2)).
double subgaussian_bound(double K, double lambda);

struct DetstabOptions {
  double dt = 1e-3;
  std::uint64_t seed = 7;
};

/// sigma = 0 runs from u* + eps r for each eps; the residual against the
/// predicted phase is fit as alpha*eps + beta*eps^p. Requires constants
/// (estimate_decay) so the decay floor M3 e^{-aT} is available.
DetstabReport detstab_experiment(const Pattern& p, const std::vector<double>& eps_list, double T,
                                 const DetstabOptions& opts = {});

struct EscapeOptions {
  double dt = 2e-3;
  int save_every = 50;    // deviation checks per step interval
  int threads = 1;
  double blow_threshold = 1e3;
  double recursion_interval = 0.0;  // 0: use a^{-1} log(2 M3) from constants
};

/// Monte Carlo first-escape statistics of the orbit distance with v0 = 0:
/// per path, the phase is advanced by the interval recursion and the orbit
/// distance refined by the local minimizer; escape is the first check where
/// it exceeds eps.
EscapeReport escape_probability(const Pattern& p, const NoiseSpec& noise, double eps, double sigma,
                                double T, int n_paths, std::uint64_t seed,
                                const EscapeOptions& opts = {});

/// Like escape_probability but with v0 = alpha eps r per path and the event
/// sup_t ||u - Pi(gamma_t)u*|| - M3 alpha e^{-at} eps >= eps, gamma_t the
/// one-shot predicted phase.
EscapeReport shortterm_experiment(const Pattern& p, const NoiseSpec& noise, double eps,
                                  double sigma, double alpha, double T, int n_paths,
                                  std::uint64_t seed, const EscapeOptions& opts = {});

struct TailCheckOptions {
  double dt = 1e-4;
  int threads = 1;
  double calibration = 0.75;  // frozen C in K = C ||f|| sqrt(T)
};

/// Simulates sup_{t<=T} |int_0^t e^{-r(t-s)} dW(s)| over n_paths and compares
/// the empirical survival on the lambda grid with the subgaussian bound.
TailReport stochconv_tail_check(double decay_rate, double T, int n_paths,
                                const std::vector<double>& lambda_grid, std::uint64_t seed,
                                const TailCheckOptions& opts = {});

}  // namespace orbitrack

#endif  // ORBITRACK_MC_HPP
