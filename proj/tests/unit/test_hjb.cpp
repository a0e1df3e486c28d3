#include "doctest.h"

#include "robarb/error.hpp"
#include "robarb/hjb.hpp"
#include "robarb/volstab.hpp"

#include <algorithm>
#include <cmath>

using namespace robarb;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

GridSpec small_grid(long K = 0) { return GridSpec::cube(2, 3.0, 33, 0.5, K); }

template <class F>
void for_interior(const GridSpec& g, F&& f) {
  std::vector<int> idx(static_cast<std::size_t>(g.dimension));
  for (std::size_t p = 0; p < g.node_count(); ++p) {
    g.unflatten(p, idx.data());
    if (g.is_interior(idx.data())) f(p);
  }
}

double max_interior_diff(const GridSpec& g, const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for_interior(g, [&](std::size_t p) { m = std::max(m, std::abs(a[p] - b[p])); });
  return m;
}

CovarianceField volstab_field(double eta) {
  return [eta](const Vec& z) { return volstab_covariance(z, eta * eta); };
}

} // namespace

TEST_CASE("drift and boundary names round-trip") {
  for (auto d : {DriftScheme::Hybrid, DriftScheme::Upwind}) CHECK(drift_scheme_from_string(to_string(d)) == d);
  for (auto b : {BoundaryMode::Ray, BoundaryMode::Axis}) CHECK(boundary_mode_from_string(to_string(b)) == b);
  CHECK_THROWS_AS(drift_scheme_from_string("central"), InvalidArgument);
}

// Boundary nodes carry truncation data (the absorbing corner rule), so the
// identities below are checked on interior nodes.
TEST_CASE("zero generator keeps U identically one") {
  SolverOptions o;
  o.allow_zero_matrix = true;
  const auto s = solve_linear([](const Vec&) { return Mat(Mat::Zero(2, 2)); }, small_grid(50), o);
  for (const auto& sl : s.value.slices) for_interior(s.value.grid, [&](std::size_t p) { CHECK(sl[p] == 1.0); });
  // rejected without the hook
  CHECK_THROWS_AS(solve_linear([](const Vec&) { return Mat(Mat::Zero(2, 2)); }, small_grid(50)), NumericalError);
}

TEST_CASE("one explicit step from the constant slice stays at one") {
  const Mat a = (Mat(2, 2) << 0.2, 0.05, 0.05, 0.1).finished();
  auto g = GridSpec::cube(2, 1.0, 17, 1e-3, 1);
  const auto s = solve_linear([&](const Vec&) { return a; }, g);
  REQUIRE(s.stats.steps == 1);
  for_interior(g, [&](std::size_t p) { CHECK(s.value.last()[p] == 1.0); });
}

TEST_CASE("CFL violations report the required step count") {
  const auto need = solve_example_pde(small_grid()).stats.required_steps;
  try {
    solve_example_pde(small_grid(need / 2));
    FAIL("expected CflError");
  } catch (const CflError& e) {
    CHECK(e.required_steps() == need);
  }
  CHECK(required_time_steps(*volstab_family(2), {}, small_grid()) == need);
}

TEST_CASE("non-SPD covariance fields are rejected") {
  const Mat bad = (Mat(2, 2) << 1.0, 2.0, 2.0, 1.0).finished();
  CHECK_THROWS_AS(solve_linear([&](const Vec&) { return bad; }, small_grid()), NumericalError);
}

TEST_CASE("singleton HJB is bitwise the linear solve") {
  const auto lin = solve_example_pde(small_grid());
  auto g = small_grid(lin.stats.steps);
  const auto hjb = solve_hjb(*volstab_family(2, 0.0), {3, 2}, g);
  CHECK(hjb.value.slices == lin.value.slices);
  CHECK(hjb.value.tau == lin.value.tau);
  CHECK(hjb.policy.selections.size() == 1);
}

TEST_CASE("duplicated candidates resolve to the lowest index") {
  FiniteList fl;
  fl.rule = [](const Vec& z) {
    const Mat a = volstab_covariance(z);
    return std::vector<Candidate>{{Vec(), a}, {Vec(), a}};
  };
  const UncertaintySetFamily fam(2, fl, 6.0);
  const auto s = solve_hjb(fam, {}, small_grid());
  REQUIRE(s.policy.selections.size() == 2);
  CHECK(s.policy.selections[1] == 0);
  CHECK(s.policy.selections[0] == s.policy.interior_pairs);
  for (const auto& sl : s.policy.index) CHECK(std::all_of(sl.begin(), sl.end(), [](int i) { return i == 0; }));
}

TEST_CASE("banded HJB collapses to the eta = 1 linear equation") {
  const auto fam = volstab_family(2, 0.5);
  const auto hjb = solve_hjb(*fam, {3, 1}, small_grid());
  auto g = small_grid(hjb.stats.steps);
  const auto lin = solve_example_pde(g);
  CHECK(max_interior_diff(g, hjb.value.last(), lin.value.last()) == 0.0);
  CHECK(hjb.policy.fraction_selecting(0) == 1.0);
  // every stored index addresses a candidate of the node
  for (const auto& sl : hjb.policy.index)
    for_interior(g, [&](std::size_t p) {
      CHECK(sl[p] >= 0);
      CHECK(sl[p] < hjb.policy.candidate_count[p]);
    });
}

TEST_CASE("property: U is nonincreasing in tau and lies in (0, 1]") {
  const auto s = solve_hjb(*volstab_family(2, 0.5), {}, small_grid());
  const auto& g = s.value.grid;
  for (std::size_t k = 0; k < s.value.slice_count(); ++k) {
    for (double v : s.value.slices[k]) {
      CHECK(v > 0.0);
      CHECK(v <= 1.0 + 1e-12);
    }
    if (k == 0) continue;
    for_interior(g, [&](std::size_t p) { CHECK(s.value.slices[k][p] <= s.value.slices[k - 1][p] + 1e-12); });
  }
}

TEST_CASE("property: the sup dominates every fixed selection") {
  const auto fam = volstab_family(2, 0.5);
  const auto hjb = solve_hjb(*fam, {}, small_grid());
  for (double eta : {1.0, 1.2, 1.5}) {
    const auto lin = solve_linear(volstab_field(eta), small_grid());
    for_interior(hjb.value.grid, [&](std::size_t p) { CHECK(hjb.value.last()[p] >= lin.value.last()[p] - 1e-4); });
  }
}

TEST_CASE("property: results do not depend on the worker count") {
  SolverOptions o1, o3;
  o1.threads = 1;
  o3.threads = 3;
  const auto fam = volstab_family(2, 0.5);
  const auto a = solve_hjb(*fam, {}, small_grid(), o1);
  const auto b = solve_hjb(*fam, {}, small_grid(), o3);
  CHECK(a.value.slices == b.value.slices);
  CHECK(a.policy.index == b.policy.index);
  CHECK(a.policy.selections == b.policy.selections);
}

TEST_CASE("upwind drift stays close to the hybrid scheme") {
  SolverOptions up;
  up.drift = DriftScheme::Upwind;
  const auto a = solve_example_pde(small_grid());
  const auto b = solve_example_pde(small_grid(), up);
  CHECK(b.stats.negative_weights == 0);
  CHECK(max_interior_diff(a.value.grid, a.value.last(), b.value.last()) < 2e-2);
}

TEST_CASE("axis boundary mode with a zero floor") {
  SolverOptions o;
  o.boundary.mode = BoundaryMode::Axis;
  const auto s = solve_example_pde(small_grid(), o);
  const GridInterpolator ip(s.value);
  const double u = ip.value(0.5, v2(1.0, 1.0));
  CHECK(u > 0.0);
  CHECK(u < 1.0);
  o.boundary.floor_table = {{0.0, 1.0}, {0.5, 0.0}};
  CHECK(o.boundary.floor_at(0.25) == doctest::Approx(0.5));
}

TEST_CASE("Pucci with a zero candidate keeps V = X") {
  FiniteList fl;
  fl.constant.push_back({Vec::Zero(2), Mat::Zero(2, 2)});
  const UncertaintySetFamily fam(2, fl, 6.0);
  SolverOptions o;
  o.allow_zero_matrix = true;
  const auto s = solve_pucci(fam, {}, small_grid(20), o);
  CHECK(s.value.tag == Quantity::V);
  const auto& g = s.value.grid;
  for (const auto& sl : s.value.slices)
    for_interior(g, [&](std::size_t p) { CHECK(sl[p] == doctest::Approx(g.point(p).sum()).epsilon(1e-14)); });
}

TEST_CASE("Pucci value matches X times the linear solution") {
  const auto g = GridSpec::cube(2, 3.0, 65, 1.0);
  const auto v = solve_pucci(*volstab_family(2, 0.0), {}, g);
  const auto u = solve_example_pde(g);
  double worst = 0.0;
  std::vector<int> idx(2);
  for (std::size_t p = 0; p < g.node_count(); ++p) {
    g.unflatten(p, idx.data());
    if (!g.is_interior(idx.data())) continue;
    worst = std::max(worst, std::abs(v.value.last()[p] / g.point(p).sum() - u.value.last()[p]));
  }
  // hybrid-scheme tolerance measured at this resolution: 4e-4
  CHECK(worst < 1e-3);
  const double v11 = v.value.value(v.value.slice_count() - 1, v2(1.0, 1.0));
  const double u11 = u.value.value(u.value.slice_count() - 1, v2(1.0, 1.0));
  CHECK(v11 == doctest::Approx(2.0 * u11).epsilon(2e-3));
}

TEST_CASE("PDI residual of the constant one is zero") {
  const auto g = small_grid(1);
  const auto one = tabulate(g, Quantity::U, {0.0, 0.25, 0.5}, [](double, const Vec&) { return 1.0; });
  const auto r = pdi_residual(one, *volstab_family(2, 0.5), {}, 0.0);
  CHECK(r.pass);
  CHECK(r.max_abs_residual == 0.0);
  CHECK_THROWS_AS(pdi_residual(tabulate(g, Quantity::U, {0.0}, [](double, const Vec&) { return 1.0; }),
                               *volstab_family(2), {}, 0.0),
                  InvalidArgument);
}

TEST_CASE("PDI residual of the HJB output is small") {
  SolverOptions o;
  o.max_retained = 1 << 20; // every step
  const auto fam = volstab_family(2, 0.5);
  const auto s = solve_hjb(*fam, {}, small_grid(), o);
  // the initial layer (U(0) = 1 with a boundary kink) is excluded
  const auto r = pdi_residual(s.value, *fam, {}, 1e-2, 0.05);
  CHECK(r.pass);
  CHECK(r.max_abs_residual < 1e-2);
}

TEST_CASE("PDI residual flags an injected positive-curvature dip") {
  const auto g = small_grid(1);
  const std::size_t centre = 16 * 33 + 16;
  auto f = tabulate(g, Quantity::U, {0.0, 0.25, 0.5}, [](double, const Vec&) { return 0.8; });
  for (auto& sl : f.slices) sl[centre] = 0.5;
  const auto r = pdi_residual(f, *volstab_family(2, 0.5), {}, 1e-6);
  CHECK_FALSE(r.pass);
  CHECK(r.witness_node == centre);
  CHECK(r.witness_z[0] == doctest::Approx(1.0));

  // decay in tau alone is also a violation
  const auto decay = tabulate(g, Quantity::U, {0.0, 0.25, 0.5}, [](double t, const Vec&) { return std::exp(-t); });
  CHECK_FALSE(pdi_residual(decay, *volstab_family(2, 0.5), {}, 1e-6).pass);
}

TEST_CASE("property: supersolutions passing the PDI check dominate the HJB output") {
  SolverOptions o;
  o.max_retained = 1 << 20;
  const auto fam = volstab_family(2, 0.5);
  const auto s = solve_hjb(*fam, {}, small_grid(), o);
  const auto& g = s.value.grid;

  GridFunction one = s.value, blend = s.value;
  for (auto& sl : one.slices) std::fill(sl.begin(), sl.end(), 1.0);
  for (auto& sl : blend.slices)
    for (double& v : sl) v = 0.5 * (1.0 + v);

  for (const GridFunction* cand : {&one, &blend}) {
    REQUIRE(pdi_residual(*cand, *fam, {}, 1e-2, 0.05).pass);
    for_interior(g, [&](std::size_t p) { CHECK(cand->last()[p] >= s.value.last()[p] - 1e-12); });
  }
}
