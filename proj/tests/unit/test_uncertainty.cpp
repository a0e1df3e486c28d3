#include "doctest.h"

#include "robarb/error.hpp"
#include "robarb/uncertainty.hpp"
#include "robarb/volstab.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace robarb;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

std::vector<Vec> simplex_probes(double floor, int count) {
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) {
    const double t = floor + (1.0 - 2.0 * floor) * k / (count - 1);
    out.push_back(v2(t, 1.0 - t));
  }
  return out;
}

std::vector<Vec> random_probes(int n, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.01, 50.0);
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) {
    Vec y(n);
    for (int i = 0; i < n; ++i) y[i] = u(rng);
    out.push_back(y);
  }
  return out;
}

UncertaintySetFamily identity_family(int n) {
  FiniteList fl;
  fl.constant.push_back({Vec::Zero(n), Mat::Identity(n, n)});
  return UncertaintySetFamily(n, fl, 6.0);
}

} // namespace

TEST_CASE("interval samples include both endpoints") {
  const auto s = interval_samples(1.0, 1.5, 3);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == doctest::Approx(1.25));
  CHECK(s[2] == 1.5);
  CHECK(interval_samples(2.0, 2.0, 5).size() == 1);
  CHECK_THROWS_AS(interval_samples(0.0, 1.0, 0), InvalidArgument);
}

TEST_CASE("volstab band without slack gives the single tensor diag(4, 4/3) at (1,3)") {
  const auto fam = volstab_family(2, 0.0);
  for (int m : {1, 2, 5}) {
    const auto set = covariance_set(*fam, v2(1.0, 3.0), {m, m});
    REQUIRE(set.size() == 1);
    CHECK(set[0](0, 0) == doctest::Approx(4.0));
    CHECK(set[0](1, 1) == doctest::Approx(4.0 / 3.0));
    CHECK(set[0](0, 1) == 0.0);
  }
}

TEST_CASE("volstab band with delta 0.5 scans eta at 1, 1.25, 1.5") {
  const auto set = covariance_set(*volstab_family(2, 0.5), v2(1.0, 1.0), {3, 1});
  REQUIRE(set.size() == 3);
  const double eta[] = {1.0, 1.25, 1.5};
  for (int k = 0; k < 3; ++k) {
    CHECK(set[k](0, 0) == doctest::Approx(2.0 * eta[k] * eta[k]));
    CHECK(set[k](1, 1) == doctest::Approx(2.0 * eta[k] * eta[k]));
    CHECK(set[k](0, 1) == 0.0);
  }
}

TEST_CASE("constant finite list returns its generator everywhere") {
  const auto fam = identity_family(2);
  for (const auto& y : random_probes(2, 20, 3)) {
    const auto set = covariance_set(fam, y, {});
    REQUIRE(set.size() == 1);
    CHECK(set[0] == Mat::Identity(2, 2));
  }
}

TEST_CASE("covariance_set rejects bad points and empty scans") {
  const auto fam = volstab_family(2);
  CHECK_THROWS_AS(covariance_set(*fam, v2(0.0, 1.0), {}), InvalidArgument);
  CHECK_THROWS_AS(covariance_set(*fam, v2(-1.0, 1.0), {}), InvalidArgument);
  CHECK_THROWS_AS(covariance_set(*fam, v2(1.0, 1.0), {0, 1}), InvalidArgument);
}

TEST_CASE("family constructor validates its parameters") {
  CHECK_THROWS_AS(UncertaintySetFamily(1, VolStabBand{}, 6.0), InvalidArgument);
  CHECK_THROWS_AS(UncertaintySetFamily(2, VolStabBand{-0.1, 1.0, 2.0}, 6.0), InvalidArgument);
  CHECK_THROWS_AS(UncertaintySetFamily(2, VolStabBand{0.0, 1.5, 2.0}, 6.0), InvalidArgument);
  CHECK_THROWS_AS(UncertaintySetFamily(2, VolStabBand{0.0, 1.0, 1.0}, 6.0), InvalidArgument);
  CHECK_THROWS_AS(UncertaintySetFamily(2, VolStabBand{}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(UncertaintySetFamily(2, FiniteList{}, 6.0), InvalidArgument);
}

TEST_CASE("property: volstab covariance sets are exactly scale invariant") {
  const auto fam = volstab_family(3, 0.5);
  CHECK(fam->scale_invariant());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lam(0.01, 100.0);
  for (const auto& y : random_probes(3, 50, 5)) {
    // powers of two keep the products exact
    const double l = std::exp2(std::round(std::log2(lam(rng))));
    const auto a = covariance_set(*fam, y, {4, 2});
    const auto b = covariance_set(*fam, l * y, {4, 2});
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
  }
}

TEST_CASE("property: every returned covariance is SPD (Cholesky succeeds)") {
  for (int n : {2, 3}) {
    const auto fam = volstab_family(n, 0.7);
    for (const auto& y : random_probes(n, 100, 7)) {
      for (const auto& a : covariance_set(*fam, y, {5, 1})) {
        CHECK(is_spd(a));
        const auto l = cholesky_lower(a);
        REQUIRE(l.has_value());
        CHECK(l->diagonal().minCoeff() > 0.0);
      }
    }
  }
}

TEST_CASE("volstab candidates satisfy the band relations") {
  const auto fam = volstab_family(2, 0.5, 1.0, 4.0);
  const Vec y = v2(0.3, 2.0);
  const auto cs = fam->candidates(y, {3, 3});
  CHECK(cs.size() == 9);
  for (const auto& c : cs) {
    const double e2 = y[0] * c.a(0, 0) / y.sum();
    CHECK(e2 >= 1.0 - 1e-12);
    CHECK(e2 <= 2.25 + 1e-12);
    CHECK(y[1] * c.a(1, 1) / y.sum() == doctest::Approx(e2));
    const double zeta = c.theta[0] / std::sqrt(c.a(0, 0));
    CHECK(zeta >= 1.0 - 1e-12);
    CHECK(zeta <= 2.0 + 1e-12);
    CHECK(c.theta[1] / std::sqrt(c.a(1, 1)) == doctest::Approx(zeta));
    CHECK(fam->contains(y, c.theta, c.a));
  }
  Mat outside = volstab_covariance(y, 1.6 * 1.6);
  CHECK_FALSE(fam->contains(y, {}, outside));
}

TEST_CASE("admissibility of the volstab band on the simplex") {
  const auto fam = volstab_family(2, 0.0, 1.0, 4.0);
  const auto rep = check_admissibility(*fam, simplex_probes(0.1, 41), {2, 3});
  CHECK(rep.all_pass());
  // y' a y / (sum y)^2 = eta^2 exactly
  CHECK(rep.at("quadratic_growth").worst == doctest::Approx(1.0));
  CHECK(rep.at("strong_ellipticity").worst > 0.0);

  const auto band = volstab_family(2, 0.5, 1.0, 4.0);
  const auto rb = check_admissibility(*band, simplex_probes(0.1, 41), {2, 3});
  CHECK(rb.all_pass());
  CHECK(rb.at("quadratic_growth").worst == doctest::Approx(2.25));
  CHECK(rb.at("quadratic_growth").worst <= 2.0 * 1.5 * 1.5);
}

TEST_CASE("identity family passes the shear condition with ratio at most Tr a") {
  const auto rep = check_admissibility(identity_family(2), simplex_probes(0.1, 11));
  CHECK(rep.at("shear").pass);
  CHECK(rep.at("shear").worst <= 2.0);
  CHECK(rep.at("strong_ellipticity").worst == doctest::Approx(1.0));
}

TEST_CASE("a_11 = 1/y_1^2 violates the growth condition near the origin") {
  FiniteList fl;
  fl.rule = [](const Vec& y) {
    Mat a = Mat::Identity(2, 2);
    a(0, 0) = 1.0 / (y[0] * y[0]);
    return std::vector<Candidate>{{Vec::Zero(2), a}};
  };
  fl.scale_invariant = false;
  const UncertaintySetFamily fam(2, fl, 6.0);
  std::vector<Vec> probes;
  std::vector<double> ratios;
  for (double t = 1.0; t >= 1e-4; t /= 2.0) {
    probes.push_back(v2(t, t));
    ratios.push_back(check_admissibility(fam, {v2(t, t)}).at("quadratic_growth").worst);
  }
  // the ratio diverges like 1/(4 t^2)
  for (std::size_t k = 1; k < ratios.size(); ++k) CHECK(ratios[k] > ratios[k - 1]);
  const auto rep = check_admissibility(fam, probes);
  const auto& q = rep.at("quadratic_growth");
  CHECK_FALSE(q.pass);
  CHECK_FALSE(rep.all_pass());
  CHECK(q.witness.size() == 2);
  CHECK(q.witness[0] == doctest::Approx(probes.back()[0]));
}

TEST_CASE("property: adding probes never improves a worst case") {
  const auto fam = volstab_family(2, 0.5, 1.0, 4.0);
  std::vector<Vec> probes;
  ConditionReport prev;
  for (const auto& y : random_probes(2, 40, 13)) {
    probes.push_back(y);
    const auto rep = check_admissibility(*fam, probes);
    if (!prev.entries.empty()) {
      for (const char* name : {"linear_growth", "quadratic_growth", "shear"}) {
        CHECK(rep.at(name).worst >= prev.at(name).worst);
      }
      CHECK(rep.at("strong_ellipticity").worst <= prev.at("strong_ellipticity").worst);
    }
    prev = rep;
  }
}

TEST_CASE("sufficiency on the volstab band gives zeta = n - 1") {
  for (int n : {2, 3}) {
    for (double delta : {0.0, 0.25, 1.0}) {
      const auto r = arbitrage_sufficiency(*volstab_family(n, delta), random_probes(n, 200, 17));
      REQUIRE(r.weight_gap_zeta.has_value());
      CHECK(std::abs(*r.weight_gap_zeta - (n - 1)) <= 1e-12);
    }
  }
}

TEST_CASE("sufficiency fails for the identity family as weights degenerate") {
  std::vector<Vec> probes;
  for (double t = 0.5; t > 1e-9; t /= 3.0) probes.push_back(v2(t, 1.0 - t));
  const auto r = arbitrage_sufficiency(identity_family(2), probes);
  CHECK_FALSE(r.weight_gap_zeta.has_value());
  CHECK(r.weight_gap_inf >= 0.0);
  CHECK(r.weight_gap_inf < 1e-6);
  // 1 - sum(mu^2) at the witness
  const Vec mu = market_weights(r.weight_gap_witness);
  CHECK(r.weight_gap_inf == doctest::Approx(1.0 - mu.squaredNorm()).epsilon(1e-9));
}

// Left-to-right summation, the order the complement is taken in.
TEST_CASE("property: market weights are nonnegative and sum to one exactly") {
  for (int n : {2, 3, 5}) {
    for (const auto& z : random_probes(n, 2000, 19 + n)) {
      const Vec mu = market_weights(z);
      CHECK(mu.minCoeff() >= 0.0);
      CHECK(std::accumulate(mu.begin(), mu.end(), 0.0) == 1.0);
    }
  }
}
