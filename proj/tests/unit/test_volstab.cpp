#include "doctest.h"

#include "robarb/error.hpp"
#include "robarb/volstab.hpp"

#include <cmath>
#include <random>

using namespace robarb;

namespace {
Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
} // namespace

TEST_CASE("volstab covariance") {
  const Mat a = volstab_covariance(v2(1.0, 3.0));
  CHECK(a(0, 0) == 4.0);
  CHECK(a(1, 1) == doctest::Approx(4.0 / 3.0));
  CHECK(a(0, 1) == 0.0);
  CHECK(volstab_covariance(v2(1.0, 3.0), 2.25)(0, 0) == 9.0);
  // homogeneous of degree zero
  CHECK(volstab_covariance(7.0 * v2(1.0, 3.0)).isApprox(a, 1e-15));
}

TEST_CASE("besq4 transition has mean psi + 4h") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const double psi = 0.7, h = 0.3;
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = besq4_step(psi, h, rng, normal);
    CHECK(x >= 0.0);
    s += x;
    s2 += x * x;
  }
  const double mean = s / n;
  // Var = 4 h (psi + 2h)
  const double se = std::sqrt(4.0 * h * (psi + 2.0 * h) / n);
  CHECK(std::abs(mean - (psi + 4.0 * h)) <= 4.0 * se);
  CHECK(s2 / n - mean * mean == doctest::Approx(4.0 * h * (psi + 2.0 * h)).epsilon(0.02));
}

TEST_CASE("oracle at a tiny horizon is close to one") {
  const auto r = oracle_u(v2(1.0, 1.0), 1e-4, 20000, 1);
  CHECK(std::abs(r.u_hat - 1.0) <= 1e-3);
  CHECK(r.paths == 20000);
  CHECK(r.seed == 1);
}

TEST_CASE("oracle is symmetric in the labels") {
  OracleOptions o;
  o.u_step = 2e-3;
  const auto a = oracle_u(v2(1.0, 3.0), 0.5, 20000, 2, o);
  const auto b = oracle_u(v2(3.0, 1.0), 0.5, 20000, 3, o);
  CHECK(std::abs(a.u_hat - b.u_hat) <= 3.0 * std::hypot(a.std_error, b.std_error));
  CHECK(a.u_hat < 1.0);
}

TEST_CASE("oracle is scale invariant") {
  // the default u-step follows the pilot clock, which scales with z
  const auto a = oracle_u(v2(1.0, 2.0), 0.5, 20000, 9);
  const auto b = oracle_u(v2(4.0, 8.0), 0.5, 20000, 10);
  CHECK(std::abs(a.u_hat - b.u_hat) <= 3.0 * std::hypot(a.std_error, b.std_error));
  CHECK(b.pilot_mean_clock == doctest::Approx(4.0 * a.pilot_mean_clock).epsilon(0.1));
}

TEST_CASE("oracle standard error shrinks like one over root paths") {
  OracleOptions o;
  o.u_step = 2e-3;
  const auto a = oracle_u(v2(1.0, 1.0), 1.0, 10000, 4, o);
  const auto b = oracle_u(v2(1.0, 1.0), 1.0, 20000, 5, o);
  const double ratio = b.std_error / a.std_error;
  CHECK(ratio >= 0.8 / std::sqrt(2.0));
  CHECK(ratio <= 1.2 / std::sqrt(2.0));
}

TEST_CASE("oracle rejects bad input") {
  CHECK_THROWS_AS(oracle_u(v2(0.0, 1.0), 1.0, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(oracle_u(v2(1.0, 1.0), -1.0, 10, 1), InvalidArgument);
  CHECK_THROWS_AS(oracle_u(v2(1.0, 1.0), 1.0, 0, 1), InvalidArgument);
}

TEST_CASE("Euler clock and BESQ clock agree") {
  const Vec x0 = v2(1.0, 1.0);
  const double T = 0.5;
  OracleOptions o;
  o.u_step = 1e-3;
  const auto orc = oracle_u(x0, T, 20000, 6, o);
  SimConfig c;
  c.paths = 20000;
  c.steps = 1000;
  c.horizon = T;
  c.seed = 7;
  c.scheme = Scheme::LogEuler;
  const auto b = simulate(least_favorable_model(2), x0, c);
  std::vector<double> clock;
  for (std::size_t p = 0; p < b.paths.size(); ++p)
    if (b.absorbed_step[p] < 0) clock.push_back(b.terminal_clock[p]);
  const auto e = mean_of(clock);
  CHECK(std::abs(e.mean - orc.mean_clock) <= 3.0 * std::hypot(e.std_error, orc.clock_std_error));
}

TEST_CASE("oracle ensemble terminal means match Euler under the least favorable model") {
  const Vec x0 = v2(1.0, 1.0);
  OracleOptions o;
  o.u_step = 1e-3;
  o.keep_ensemble = true;
  const auto orc = oracle_u(x0, 0.5, 20000, 8, o);
  REQUIRE(orc.ensemble.terminal_x.size() == 40000);
  SimConfig c;
  c.paths = 20000;
  c.steps = 1000;
  c.horizon = 0.5;
  c.seed = 9;
  c.scheme = Scheme::LogEuler;
  const auto b = simulate(least_favorable_model(2), x0, c);
  for (int i = 0; i < 2; ++i) {
    std::vector<double> xo, xe;
    for (long p = 0; p < orc.paths; ++p) xo.push_back(orc.ensemble.terminal_x[2 * p + i]);
    for (std::size_t p = 0; p < b.paths.size(); ++p) xe.push_back(b.terminal(p)[i]);
    const auto mo = mean_of(xo), me = mean_of(xe);
    CHECK(std::abs(mo.mean - me.mean) <= 3.0 * std::hypot(mo.std_error, me.std_error));
  }
}

TEST_CASE("example PDE starts at one and decreases in tau") {
  const auto g = GridSpec::cube(2, 3.0, 33, 1.0);
  const auto s = solve_example_pde(g);
  CHECK(s.value.scale_invariant);
  CHECK(s.value.tag == Quantity::U);
  for (double u : s.value.slices.front()) CHECK(u == 1.0);
  const std::size_t c = 16 * 33 + 16;
  for (std::size_t k = 1; k < s.value.slices.size(); ++k) CHECK(s.value.slices[k][c] <= s.value.slices[k - 1][c]);
  const double u = s.value.value(s.value.slices.size() - 1, v2(1.0, 1.0));
  CHECK(u > 0.4);
  CHECK(u < 0.7);
}

TEST_CASE("arbitrage functional on a frozen bundle") {
  SimConfig c;
  c.paths = 10;
  c.steps = 5;
  const auto b = simulate(frozen_model(2), v2(1.0, 3.0), c);
  const auto e = arbitrage_functional(b);
  CHECK(e.mean == doctest::Approx(1.0));
  CHECK(e.std_error == doctest::Approx(0.0));
}
