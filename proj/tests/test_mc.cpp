#include <doctest.h>

#include <cmath>

#include "orbitrack/errors.hpp"
#include "orbitrack/mc.hpp"
#include "test_helpers.hpp"

using namespace orbitrack;
using orbitrack::testing::fhn_pattern;

TEST_CASE("wilson interval basics") {
  auto [lo, hi] = wilson_interval(0, 100);
  CHECK(lo <= 1e-12);
  CHECK(hi > 0.0);
  CHECK(hi < 0.05);

  auto [lo2, hi2] = wilson_interval(50, 100);
  CHECK(lo2 < 0.5);
  CHECK(hi2 > 0.5);
  CHECK(lo2 > 0.38);
  CHECK(hi2 < 0.62);

  CHECK_THROWS_AS(wilson_interval(1, 0), StructuralError);
}

TEST_CASE("subgaussian bound values and vacuous region") {
  const double e = std::exp(1.0);
  CHECK(subgaussian_bound(1.0, 0.0) == doctest::Approx(e));
  CHECK_THROWS_AS(subgaussian_bound(0.0, 1.0), StructuralError);
  CHECK_THROWS_AS(subgaussian_bound(1.0, -1.0), StructuralError);

  // lambda^2 <= 2 e K^2 keeps the bound above one
  double k = 0.8;
  double edge = std::sqrt(2.0 * e) * k;
  CHECK(subgaussian_bound(k, 0.999 * edge) >= 1.0);
  CHECK(subgaussian_bound(k, 1.5 * edge) < 1.0);

  // constant variable X = K satisfies the moment growth, and the bound at
  // lambda = K is e^{1 - 1/(2e)} ~ 2.26, comfortably above P(X > K) = 0
  CHECK(subgaussian_bound(1.0, 1.0) == doctest::Approx(e * std::exp(-1.0 / (2.0 * e))));
}

TEST_CASE("brownian sup tail matches the reflection principle") {
  // decay rate zero: plain Brownian motion on [0,1]
  std::vector<double> grid = {3.0};
  TailCheckOptions opts;
  opts.dt = 1e-4;
  opts.threads = 2;
  auto rep = stochconv_tail_check(0.0, 1.0, 20000, grid, 4242, opts);
  // P(sup |B| > 3) ~ 2 P(|N| > 3) = 4 Phi(-3) = 0.0054
  double exact = 4.0 * 0.5 * std::erfc(3.0 / std::sqrt(2.0));
  double se = std::sqrt(exact * (1.0 - exact) / 20000.0);
  CHECK(std::abs(rep.empirical_survival[0] - exact) <= 3.0 * se + 2e-4);
}

TEST_CASE("tail domination across the lambda grid") {
  TailCheckOptions opts;
  opts.dt = 2e-4;
  opts.threads = 2;
  for (double rate : {0.0, 1.0}) {
    double T = rate == 0.0 ? 1.0 : 4.0;
    double K = opts.calibration * std::sqrt(T);
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(5.0 * K * i / 19.0);
    auto rep = stochconv_tail_check(rate, T, 10000, grid, 99, opts);
    CHECK(rep.violations == 0);
    // survival is nonincreasing along the grid
    for (size_t i = 1; i < rep.empirical_survival.size(); ++i)
      CHECK(rep.empirical_survival[i] <= rep.empirical_survival[i - 1] + 1e-12);
  }
}

TEST_CASE("escape probability: zero noise never escapes, reports reproduce") {
  const Pattern& p = fhn_pattern();
  auto noise = NoiseSpec::additive_mode_family(p.ustar.grid, 2, 0, 6, 2.0, 1.0, 20.0, 1.0);
  EscapeOptions opts;
  opts.dt = 2e-3;
  opts.save_every = 100;
  opts.threads = 2;
  double eps = 0.05;

  auto rep0 = escape_probability(p, noise, eps, 0.0, 2.0, 8, 11, opts);
  CHECK(rep0.n_escapes == 0);
  CHECK(rep0.escape_fraction == 0.0);
  CHECK_FALSE(rep0.degenerate);
  CHECK(rep0.wilson_lo <= rep0.escape_fraction);
  CHECK(rep0.wilson_hi >= rep0.escape_fraction);

  auto rep1 = escape_probability(p, noise, eps, 0.02, 2.0, 8, 11, opts);
  auto rep2 = escape_probability(p, noise, eps, 0.02, 2.0, 8, 11, opts);
  CHECK(rep1.n_escapes == rep2.n_escapes);
  for (size_t i = 0; i < rep1.first_escape_times.size(); ++i)
    CHECK(rep1.first_escape_times[i] == rep2.first_escape_times[i]);

  CHECK_THROWS_AS(escape_probability(p, noise, 0.01, 0.02, 1.0, 4, 1, opts), StructuralError);
}

TEST_CASE("shortterm experiment runs and respects the sigma <= eps gate") {
  const Pattern& p = fhn_pattern();
  auto noise = NoiseSpec::additive_mode_family(p.ustar.grid, 2, 0, 6, 2.0, 1.0, 20.0, 1.0);
  EscapeOptions opts;
  opts.dt = 2e-3;
  opts.save_every = 100;
  opts.threads = 2;
  auto rep = shortterm_experiment(p, noise, 0.05, 0.0, 1.0, 1.0, 6, 21, opts);
  CHECK(rep.n_paths == 6);
  CHECK(rep.n_escapes == 0);  // deterministic, below the deterministic threshold
  CHECK_THROWS_AS(shortterm_experiment(p, noise, 0.01, 0.05, 1.0, 1.0, 4, 1, opts),
                  StructuralError);
}

TEST_CASE("detstab: residual ratios and quadratic excess") {
  const Pattern& p = fhn_pattern();
  REQUIRE(p.constants.has_value());
  double T = 2.0 * std::log(std::max(p.constants->M3, 1.01)) / p.constants->a;
  T = std::min(T, p.constants->fit_t1);  // stay inside the certified envelope window
  DetstabOptions opts;
  opts.dt = 2e-3;
  auto rep = detstab_experiment(p, {1e-1, 3e-2, 1e-2, 3e-3}, T, opts);
  REQUIRE(rep.residuals.size() == 4);
  // the bound holds below an empirical eps'; it must cover the small end
  double bound = rep.decay_floor + 0.1;
  double eps_prime = 0.0;
  for (size_t i = 0; i < rep.eps_list.size(); ++i)
    if (rep.ratios[i] <= bound) eps_prime = std::max(eps_prime, rep.eps_list[i]);
  CHECK(eps_prime >= 1e-2);
  CHECK(rep.excess_exponent == doctest::Approx(2.0).epsilon(0.1));
}
