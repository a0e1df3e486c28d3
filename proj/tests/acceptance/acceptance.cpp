// Acceptance harness: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: robarb_acceptance [criterion ...]   (default: all)

#include "robarb/hjb.hpp"
#include "robarb/parallel.hpp"
#include "robarb/portfolio.hpp"
#include "robarb/sde.hpp"
#include "robarb/uncertainty.hpp"
#include "robarb/volstab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace robarb;

namespace {

// ---- pinned tolerances and sizes ---------------------------------------

constexpr double kRelTol = 0.02;   // criteria 1, 4
constexpr double kSigmas = 3.0;    // criteria 1, 2, 4, 5
constexpr long kOraclePaths = 100000;
constexpr long kEulerPaths = 100000;
constexpr long kEulerSteps = 2000;
constexpr long kContainmentPaths = 100000;
constexpr long kContainmentSteps = 2000;
constexpr double kBoxHalfWidth = 3.0; // log-coordinate box [-3, 3]^n
constexpr int kFineNodes = 129;
constexpr int kCoarseNodes = 65;
constexpr double kBandDelta = 0.5;

// Criterion 3: per-node solver tolerance of the 65^2 scheme (grid-refinement
// change of U(1,(1,1)) between 65^2 and 129^2 is about 7e-5); the check uses 10x.
constexpr double kSchemeTol = 1e-4;
constexpr double kPolicyFraction = 0.99;

// Criterion 5
constexpr long kTrendPaths = 20000;
constexpr long kTrendSteps = 2000;

// Criterion 6
constexpr long kOutperformPaths = 10000;
constexpr long kOutperformStepsLow = 2000;
constexpr long kOutperformStepsHigh = 8000;
constexpr double kOutperformLow = 0.99;
constexpr double kOutperformHigh = 0.995;

// Criterion 7: value tolerance is the solver error (<1e-3) plus Monte Carlo
// slack for the replicating wealth; column/row slack is 0.01.
constexpr long kSaddlePaths = 10000;
constexpr long kSaddleSteps = 2000;
constexpr double kSaddleValueTol = 0.05;
constexpr double kSaddleColumnTol = 0.01;
constexpr double kSaddleRowTol = 0.01;

// Criterion 9: the identity holds to round-off
constexpr double kSufficiencyTol = 1e-12;

// Criterion 10: interpolation tolerance
constexpr double kScaleTol = 1e-2;

constexpr std::uint64_t kSeed = 20240601;

const Vec& x0() {
  static const Vec v = (Vec(2) << 1.0, 1.0).finished();
  return v;
}

int threads() { return hardware_threads(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- shared fixtures (lazily computed) ----------------------------------

SolverOptions solver_opts() {
  SolverOptions o;
  o.threads = threads();
  return o;
}

const Solution& linear_fine() {
  static const Solution s =
      solve_example_pde(GridSpec::cube(2, kBoxHalfWidth, kFineNodes, 1.0), solver_opts());
  return s;
}

const Solution& linear_coarse() {
  static const Solution s =
      solve_example_pde(GridSpec::cube(2, kBoxHalfWidth, kCoarseNodes, 1.0), solver_opts());
  return s;
}

const std::shared_ptr<const UncertaintySetFamily>& band() {
  static const auto f = volstab_family(2, kBandDelta);
  return f;
}

const Solution& hjb_coarse() {
  static const Solution s =
      solve_hjb(*band(), CandidateScan{}, GridSpec::cube(2, kBoxHalfWidth, kCoarseNodes, 1.0), solver_opts());
  return s;
}

const std::shared_ptr<const GridInterpolator>& hjb_interp() {
  static const auto p = std::make_shared<const GridInterpolator>(hjb_coarse().value);
  return p;
}

const OracleResult& oracle() {
  static const OracleResult r = [] {
    OracleOptions o;
    o.threads = threads();
    return oracle_u(x0(), 1.0, kOraclePaths, kSeed, o);
  }();
  return r;
}

double u_at_x0(const Solution& s) { return GridInterpolator(s.value).value(1.0, x0()); }

// The three in-band perturbations of the least favorable model.
std::vector<MarketModelSpec> perturbations() {
  std::vector<MarketModelSpec> m;
  m.push_back(perturbed_model(2, 1.2, 1.0, band()));
  m.push_back(perturbed_model(2, 1.5, 1.0, band()));
  m.push_back(perturbed_model(
      2, [](double, const Vec& z) { return 1.0 + 0.5 * z[0] / z.sum(); }, "eta=1+0.5*mu1", 1.0, band()));
  return m;
}

SimConfig sim(long paths, long steps, std::uint64_t seed) {
  SimConfig c;
  c.horizon = 1.0;
  c.paths = paths;
  c.steps = steps;
  c.seed = seed;
  c.threads = threads();
  c.keep_paths = false;
  return c;
}

// ---- criteria -----------------------------------------------------------

Outcome c1_oracle_agreement() {
  const double u = u_at_x0(linear_fine());
  const auto& o = oracle();
  const double diff = std::abs(u - o.u_hat);
  const double tol = std::max(kRelTol * u, kSigmas * o.std_error);
  return {diff <= tol, fmt("U_pde=%.6f (129^2, K=%ld) oracle=%.6f+-%.6f (%ld paths) |diff|=%.2e tol=%.2e", u,
                           linear_fine().stats.steps, o.u_hat, o.std_error, o.paths, diff, tol)};
}

Outcome c2_dual_simulator() {
  const auto& o = oracle();
  SimConfig c = sim(kEulerPaths, kEulerSteps, kSeed + 1);
  const auto b = simulate(least_favorable_model(2), x0(), c);
  const auto e = arbitrage_functional(b);
  const double diff = std::abs(e.mean - o.u_hat);
  const double tol = kSigmas * std::hypot(e.std_error, o.std_error);
  return {diff <= tol, fmt("euler=%.6f+-%.6f (K=%ld, %ld absorbed) besq=%.6f+-%.6f |diff|=%.2e tol=%.2e", e.mean,
                           e.std_error, kEulerSteps, b.absorbed_count(), o.u_hat, o.std_error, diff, tol)};
}

Outcome c3_hjb_collapse() {
  const auto& h = hjb_coarse();
  const auto& l = linear_coarse();
  const GridSpec& g = h.value.grid;
  double worst = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(g.dimension));
  for (std::size_t p = 0; p < g.node_count(); ++p) {
    g.unflatten(p, idx.data());
    if (!g.is_interior(idx.data())) continue;
    worst = std::max(worst, std::abs(h.value.last()[p] - l.value.last()[p]));
  }
  const double frac = h.policy.fraction_selecting(0);
  const bool ok = worst <= 10.0 * kSchemeTol && frac >= kPolicyFraction;
  return {ok, fmt("max interior |U_hjb - U_lin|=%.2e (tol %.1e, K_hjb=%ld K_lin=%ld) eta=1 selected at %.4f of "
                  "%ld pairs",
                  worst, 10.0 * kSchemeTol, h.stats.steps, l.stats.steps, frac, h.policy.interior_pairs)};
}

Outcome c4_containment() {
  const double u = u_at_x0(linear_fine());
  const auto q = containment_probability(auxiliary_model(2), x0(), sim(kContainmentPaths, kContainmentSteps, kSeed + 2));
  const double diff = std::abs(q.q_hat - u);
  const double tol = std::max(kRelTol * u, kSigmas * q.std_error);
  return {diff <= tol, fmt("Q_hat=%.6f+-%.6f (K=%ld) U_pde=%.6f |diff|=%.2e tol=%.2e", q.q_hat, q.std_error,
                           kContainmentSteps, u, diff, tol)};
}

Outcome c5_supermartingale() {
  SimConfig c = sim(kTrendPaths, kTrendSteps, kSeed + 3);
  std::ostringstream os;
  bool ok = true;
  {
    const auto r = supermartingale_check(least_favorable_model(2, band()), *hjb_interp(), x0(), c, TrendKind::Constant,
                                         kSigmas);
    ok = ok && r.pass;
    os << fmt("M_o constant:%s (Xi %.4f -> %.4f, %zu witnesses)", r.pass ? "ok" : "FAIL", r.means.front(),
              r.means.back(), r.witness_times.size());
  }
  for (const auto& m : perturbations()) {
    const auto r = supermartingale_check(m, *hjb_interp(), x0(), c, TrendKind::Nonincreasing, kSigmas);
    ok = ok && r.pass;
    os << fmt("; %s nonincreasing:%s (Xi %.4f -> %.4f)", m.name.c_str(), r.pass ? "ok" : "FAIL", r.means.front(),
              r.means.back());
  }
  return {ok, os.str()};
}

Outcome c6_outperformance() {
  const double u = hjb_interp()->value(1.0, x0());
  const double v0 = u * x0().sum();
  const auto rule = InvestmentRule::generated(hjb_interp(), 1.0, "pi_U");
  BacktestOptions bo;
  bo.track_surplus = false;
  bo.track_interim = false;
  bo.keep_paths = false;
  std::ostringstream os;
  bool ok = true;
  for (const auto& m : perturbations()) {
    const auto lo = backtest(rule, m, x0(), v0, sim(kOutperformPaths, kOutperformStepsLow, kSeed + 4), bo);
    const auto hi = backtest(rule, m, x0(), v0, sim(kOutperformPaths, kOutperformStepsHigh, kSeed + 4), bo);
    const double fl = lo.outperform_fraction(), fh = hi.outperform_fraction();
    const bool pass = fl >= kOutperformLow && fh >= kOutperformHigh;
    ok = ok && pass;
    os << fmt("%s%s: %.4f@K=%ld %.4f@K=%ld%s", os.tellp() > 0 ? "; " : "", m.name.c_str(), fl, kOutperformStepsLow,
              fh, kOutperformStepsHigh, pass ? "" : " FAIL");
  }
  return {ok, os.str()};
}

Outcome c7_saddle() {
  std::vector<MarketModelSpec> models{least_favorable_model(2, band()), perturbed_model(2, 1.25, 1.0, band())};
  std::vector<InvestmentRule> rules{InvestmentRule::generated(hjb_interp(), 1.0, "pi_o"), InvestmentRule::market()};
  SimConfig c = sim(kSaddlePaths, kSaddleSteps, kSeed + 5);
  c.scheme = Scheme::LogEuler; // positive prices: no Euler ruin or absorption in the ratio maximum
  const auto r = saddle_check(*hjb_interp(), x0(), c, models, rules,
                              SaddleTolerances{kSaddleValueTol, kSaddleColumnTol, kSaddleRowTol});
  std::ostringstream os;
  os << fmt("U*=%.5f xi(pi_o,M_o)=%.5f [p50 %.5f p99 %.5f, %ld absorbed excluded] xi(pi_o,eta=1.25)=%.5f xi(market,M_o)=%.5f", r.u_star,
            r.cells[0][0].xi_hat, r.cells[0][0].p50, r.cells[0][0].p99, r.cells[0][0].absorbed, r.cells[0][1].xi_hat, r.cells[1][0].xi_hat);
  for (const auto& w : r.witnesses) os << "; " << w;
  return {r.pass(), os.str()};
}

Outcome c8_exact_identities() {
  std::vector<std::string> bad;
  std::mt19937_64 rng(kSeed);
  std::uniform_real_distribution<double> unif(0.01, 100.0);

  // market-rule replication: Z = v0 X / X(0) with v0 = X(0)
  {
    SimConfig c = sim(200, 500, kSeed + 6);
    BacktestOptions bo;
    const auto led = backtest(InvestmentRule::market(), least_favorable_model(2), x0(), x0().sum(), c, bo);
    bool ok = true;
    for (std::size_t p = 0; p < led.wealth.size(); ++p)
      for (std::size_t k = 0; k < led.wealth[p].size(); ++k) ok = ok && led.wealth[p][k] == led.market[p][k];
    for (std::size_t p = 0; p < led.terminal_wealth.size(); ++p)
      ok = ok && led.terminal_wealth[p] == led.terminal_market[p];
    if (!ok) bad.push_back("market replication");
  }
  // generated rule at U = 1 reduces to market weights
  {
    const GridSpec g = GridSpec::cube(2, kBoxHalfWidth, 17, 1.0, 1);
    auto one = std::make_shared<const GridInterpolator>(
        tabulate(g, Quantity::U, {0.0, 1.0}, [](double, const Vec&) { return 1.0; }));
    const auto gen = InvestmentRule::generated(one, 1.0);
    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
      const Vec z = (Vec(2) << unif(rng), unif(rng)).finished();
      const double t = std::fmod(unif(rng), 1.0);
      ok = ok && (evaluate_rule(gen, t, z).array() == evaluate_rule(InvestmentRule::market(), t, z).array()).all();
    }
    if (!ok) bad.push_back("generated reduction");
  }
  // market weights sum to one
  {
    bool ok = true;
    for (int n = 2; n <= 3; ++n)
      for (int i = 0; i < 10000; ++i) {
        Vec z(n);
        for (int j = 0; j < n; ++j) z[j] = unif(rng);
        const Vec mu = market_weights(z);
        ok = ok && std::accumulate(mu.begin(), mu.end(), 0.0) == 1.0;
      }
    if (!ok) bad.push_back("sum of weights");
  }
  // U(0, .) == 1
  {
    const auto& s0 = hjb_coarse().value.slices.front();
    const auto& s1 = linear_fine().value.slices.front();
    if (hjb_coarse().value.tau.front() != 0.0 ||
        !std::all_of(s0.begin(), s0.end(), [](double v) { return v == 1.0; }) ||
        !std::all_of(s1.begin(), s1.end(), [](double v) { return v == 1.0; }))
      bad.push_back("U(0) slice");
  }
  // Q_hat(0) = 1
  {
    SimConfig c = sim(1000, 1, kSeed + 7);
    c.horizon = 0.0;
    if (containment_probability(auxiliary_model(2), x0(), c).q_hat != 1.0) bad.push_back("Q_hat(0)");
  }
  // determinism across thread counts
  {
    SimConfig c1 = sim(64, 200, kSeed + 8), c4 = c1;
    c1.threads = 1;
    c4.threads = 4;
    const auto b1 = simulate(auxiliary_model(2), x0(), c1);
    const auto b4 = simulate(auxiliary_model(2), x0(), c4);
    SolverOptions o1, o4;
    o1.threads = 1;
    o4.threads = 4;
    const GridSpec g = GridSpec::cube(2, kBoxHalfWidth, 33, 0.25);
    const auto h1 = solve_hjb(*band(), CandidateScan{}, g, o1);
    const auto h4 = solve_hjb(*band(), CandidateScan{}, g, o4);
    if (b1.terminal_x != b4.terminal_x || h1.value.slices != h4.value.slices || h1.policy.index != h4.policy.index)
      bad.push_back("thread determinism");
  }
  std::string d = "market replication, generated reduction, sum(mu)=1, U(0)=1, Q_hat(0)=1, thread determinism";
  if (!bad.empty()) {
    d = "failed:";
    for (const auto& b : bad) d += " " + b;
  }
  return {bad.empty(), d};
}

Outcome c9_sufficiency() {
  std::ostringstream os;
  bool ok = true;
  for (int n = 2; n <= 3; ++n) {
    std::vector<Vec> probes;
    std::mt19937_64 rng(kSeed + static_cast<unsigned>(n));
    std::uniform_real_distribution<double> unif(0.05, 20.0);
    for (int i = 0; i < 500; ++i) {
      Vec y(n);
      for (int j = 0; j < n; ++j) y[j] = unif(rng);
      probes.push_back(y);
    }
    for (double delta : {0.0, 0.5}) {
      const auto r = arbitrage_sufficiency(*volstab_family(n, delta), probes, CandidateScan{});
      const double z = r.weight_gap_zeta.value_or(-1.0);
      const bool pass = std::abs(z - (n - 1)) <= kSufficiencyTol;
      ok = ok && pass;
      os << fmt("%sn=%d delta=%.1f zeta=%.15g%s", os.tellp() > 0 ? "; " : "", n, delta, z, pass ? "" : " FAIL");
    }
  }
  return {ok, os.str()};
}

Outcome c10_scale_invariance() {
  // Raw grid values: no diagonal re-centring, so off-centre points are genuine grid reads.
  const auto& f = linear_fine().value;
  const std::size_t last = f.slice_count() - 1;
  std::ostringstream os;
  bool ok = true;
  for (const Vec& base : {x0(), Vec((Vec(2) << 1.0, 3.0).finished())}) {
    const double u = f.value(last, base);
    for (double lam : {0.5, 2.0}) {
      const double d = std::abs(f.value(last, lam * base) - u);
      ok = ok && d <= kScaleTol;
      os << fmt("%sz=(%g,%g) lambda=%g |dU|=%.2e", os.tellp() > 0 ? "; " : "", base[0], base[1], lam, d);
    }
  }
  return {ok, os.str()};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "oracle agreement", c1_oracle_agreement},
      {2, "dual-simulator consistency", c2_dual_simulator},
      {3, "HJB collapse", c3_hjb_collapse},
      {4, "containment equals PDE", c4_containment},
      {5, "supermartingale suite", c5_supermartingale},
      {6, "outperformance", c6_outperformance},
      {7, "game saddle", c7_saddle},
      {8, "exact identities", c8_exact_identities},
      {9, "sufficiency conditions", c9_sufficiency},
      {10, "scale invariance", c10_scale_invariance},
  };
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!pick.empty() && !pick.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("[%s] criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), sec);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
