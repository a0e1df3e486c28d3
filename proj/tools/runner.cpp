#include "runner.hpp"

#include "robarb/volstab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>

#ifndef ROBARB_VERSION
#define ROBARB_VERSION "0.0.0"
#endif

namespace robarb::cli {

namespace fs = std::filesystem;

bool RunOutcome::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass || !c.acceptance; });
}

namespace {

constexpr double kRangeTol = 1e-9;

struct Ctx {
  const RunConfig& cfg;
  fs::path dir;
  json report = json::object();
  json cfl = json::array();
  json seeds = json::object();
  std::vector<CheckResult> checks;

  Ctx(const RunConfig& c, fs::path d) : cfg(c), dir(std::move(d)) {}

  std::uint64_t seed(const std::string& use, std::uint64_t offset) {
    const std::uint64_t s = cfg.seed.value_or(0) + offset;
    seeds[use] = s;
    return s;
  }
  void check(CheckResult c) { checks.push_back(std::move(c)); }
};

json check_json(const CheckResult& c) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(format_double(v)); };
  return {{"name", c.name},       {"pass", c.pass},           {"acceptance", c.acceptance}, {"value", num(c.value)},
          {"reference", num(c.reference)}, {"tolerance", num(c.tolerance)}, {"detail", c.detail}};
}

void write_text_csv(const fs::path& file, const std::vector<std::string>& header,
                    const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(file);
  if (!os) throw Error("io", "cannot write " + file.string());
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

std::string slug(std::string s) {
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
  return s;
}

std::size_t center_node(const GridSpec& g) {
  const auto st = g.strides();
  std::size_t p = 0;
  for (int a = 0; a < g.dimension; ++a) p += st[static_cast<std::size_t>(a)] * static_cast<std::size_t>(g.nodes[static_cast<std::size_t>(a)] / 2);
  return p;
}

// Values along axis 0 through the centre of the box, one column per retained level.
void write_section(const GridFunction& f, const fs::path& file) {
  const GridSpec& g = f.grid;
  std::vector<std::string> header = {"y0", "mu1"};
  for (double t : f.tau) header.push_back("tau=" + format_double(t));
  const auto st = g.strides();
  std::size_t base = center_node(g) - st[0] * static_cast<std::size_t>(g.nodes[0] / 2);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < g.nodes[0]; ++i) {
    const std::size_t p = base + st[0] * static_cast<std::size_t>(i);
    const Vec z = g.point(p);
    std::vector<double> r = {g.coord(0, i), z[0] / z.sum()};
    for (const auto& s : f.slices) r.push_back(s[p]);
    rows.push_back(std::move(r));
  }
  write_csv(file, header, rows);
}

void grid_checks(Ctx& ctx, const GridFunction& f, const std::string& prefix) {
  const GridSpec& g = f.grid;
  std::vector<int> idx(static_cast<std::size_t>(g.dimension));
  if (f.tag == Quantity::U) {
    double lo = 1.0, hi = 0.0;
    for (const auto& s : f.slices)
      for (double v : s) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    ctx.check({prefix + ".range", lo > 0.0 && hi <= 1.0 + kRangeTol, true, hi, 1.0, kRangeTol,
               "min " + format_double(lo) + ", max " + format_double(hi)});
    double worst = 0.0;
    for (std::size_t k = 1; k < f.slices.size(); ++k)
      for (std::size_t p = 0; p < g.node_count(); ++p) {
        g.unflatten(p, idx.data());
        if (g.is_interior(idx.data())) worst = std::max(worst, f.slices[k][p] - f.slices[k - 1][p]);
      }
    ctx.check({prefix + ".monotone_in_tau", worst <= kRangeTol, true, worst, 0.0, kRangeTol, "largest increase between retained levels"});
  } else {
    double worst = 0.0, lo = INFINITY;
    for (std::size_t p = 0; p < g.node_count(); ++p) {
      worst = std::max(worst, std::abs(f.slices.front()[p] - g.point(p).sum()));
      for (const auto& s : f.slices) lo = std::min(lo, s[p]);
    }
    ctx.check({prefix + ".initial_condition", worst <= kRangeTol * 10, true, worst, 0.0, kRangeTol * 10, "V(0, z) = z_1 + ... + z_n"});
    ctx.check({prefix + ".positive", lo > 0.0, true, lo, 0.0, 0.0, "min V"});
  }
}

void record_solution(Ctx& ctx, const std::string& stem, const Solution& s, const fs::path& dir) {
  write_grid_function(s.value, dir, stem);
  write_section(s.value, dir / (stem + "_section.csv"));
  json st = to_json(s.stats);
  st["solver"] = stem;
  ctx.cfl.push_back(st);
}

double at_x0(const GridFunction& f, const Vec& x0) { return f.value(f.slice_count() - 1, x0); }

Solution do_hjb(Ctx& ctx, const fs::path& dir) {
  const auto& c = ctx.cfg;
  auto s = solve_hjb(*c.family, c.scan, c.grid, c.solver);
  record_solution(ctx, "U", s, dir);
  grid_checks(ctx, s.value, "hjb");
  const auto pdi = pdi_residual(s.value, *c.family, c.scan, c.checks.pdi_tol, c.checks.pdi_skip_below, c.solver.drift);
  ctx.check({"hjb.pdi_residual", pdi.pass, false, pdi.min_residual, 0.0, c.checks.pdi_tol,
             "on the retained levels only; informational"});
  ctx.report["hjb"] = {{"stats", to_json(s.stats)},
                       {"policy", to_json(s.policy)},
                       {"pdi_residual", to_json(pdi)},
                       {"u_at_x0", at_x0(s.value, c.x0)}};
  return s;
}

Solution do_linear(Ctx& ctx, const fs::path& dir) {
  const auto& c = ctx.cfg;
  const auto fam = c.family;
  const auto scan = c.scan;
  // lowest-variance member of the family
  auto s = solve_linear([fam, scan](const Vec& z) { return fam->covariances(z, scan).front(); }, c.grid, c.solver);
  record_solution(ctx, "U_linear", s, dir);
  grid_checks(ctx, s.value, "linear");
  ctx.report["linear"] = {{"stats", to_json(s.stats)}, {"u_at_x0", at_x0(s.value, c.x0)}};
  return s;
}

void do_pucci(Ctx& ctx, const fs::path& dir) {
  const auto& c = ctx.cfg;
  auto s = solve_pucci(*c.family, c.scan, c.grid, c.solver);
  record_solution(ctx, "V", s, dir);
  grid_checks(ctx, s.value, "pucci");
  const double v = at_x0(s.value, c.x0);
  ctx.report["pucci"] = {{"stats", to_json(s.stats)}, {"v_at_x0", v}, {"v_over_x_at_x0", v / c.x0.sum()}};
}

MarketModelSpec containment_model(const RunConfig& c) {
  for (const auto& m : c.models)
    if (m.type == "auxiliary") return make_model(m, c.x0.size(), c.family);
  return auxiliary_model(static_cast<int>(c.x0.size()), 1.0, c.family);
}

ContainmentEstimate do_containment(Ctx& ctx, const fs::path& dir) {
  const auto& c = ctx.cfg;
  const auto model = containment_model(c);
  const std::uint64_t seed = ctx.seed("containment", 1);
  std::vector<std::vector<double>> rows;
  json curve = json::array();
  ContainmentEstimate at_horizon;
  std::vector<ContainmentEstimate> est;
  std::vector<double> hs = c.horizons;
  if (std::find(hs.begin(), hs.end(), c.sim.horizon) == hs.end()) hs.push_back(c.sim.horizon);
  std::sort(hs.begin(), hs.end());
  for (double h : hs) {
    SimConfig s = c.sim;
    s.seed = seed;
    s.keep_paths = false;
    s.horizon = h;
    s.steps = std::max(1L, std::lround(static_cast<double>(c.sim.steps) * h / c.sim.horizon));
    const auto q = containment_probability(model, c.x0, s);
    rows.push_back({h, q.q_hat, q.std_error, static_cast<double>(q.absorbed), static_cast<double>(s.steps)});
    json e = to_json(q);
    e["horizon"] = h;
    e["steps"] = s.steps;
    curve.push_back(e);
    est.push_back(q);
    if (h == c.sim.horizon) at_horizon = q;
  }
  write_csv(dir / "containment_curve.csv", {"T", "q_hat", "stderr", "absorbed", "steps"}, rows);
  double worst = 0.0;
  bool ok = true;
  for (std::size_t k = 1; k < est.size(); ++k) {
    const double rise = est[k].q_hat - est[k - 1].q_hat;
    const double tol = c.checks.sigmas * std::hypot(est[k].std_error, est[k - 1].std_error);
    worst = std::max(worst, rise);
    ok = ok && rise <= tol + kRangeTol;
  }
  ctx.check({"containment.nonincreasing_in_T", ok, true, worst, 0.0, c.checks.sigmas, "largest rise of Q_hat, in units of paired stderr budget"});
  ctx.report["containment"] = {{"model", model.name}, {"curve", curve}};
  return at_horizon;
}

OracleResult do_oracle(Ctx& ctx) {
  const auto& c = ctx.cfg;
  const auto r = oracle_u(c.x0, c.sim.horizon, c.oracle_paths, ctx.seed("oracle", 0), c.oracle);
  ctx.check({"oracle.range", r.u_hat > 0.0 && r.u_hat <= 1.0 + c.checks.sigmas * r.std_error, true, r.u_hat, 1.0,
             c.checks.sigmas * r.std_error, "0 < u <= 1"});
  ctx.report["oracle"] = to_json(r);
  ctx.report["oracle"]["horizon"] = c.sim.horizon;
  return r;
}

std::vector<MarketModelSpec> primal_models(const RunConfig& c) {
  std::vector<MarketModelSpec> out;
  for (const auto& m : c.models)
    if (m.type != "auxiliary") out.push_back(make_model(m, static_cast<int>(c.x0.size()), c.family));
  if (out.empty()) throw ConfigError("models", "needs at least one primal (non-auxiliary) model");
  return out;
}

// Least favourable flags aligned with primal_models.
std::vector<bool> least_favorable_flags(const RunConfig& c) {
  std::vector<bool> out;
  for (const auto& m : c.models)
    if (m.type != "auxiliary") out.push_back(m.type == "least_favorable");
  return out;
}

std::vector<InvestmentRule> make_rules(const RunConfig& c, const std::shared_ptr<const GridInterpolator>& U) {
  std::vector<InvestmentRule> out;
  for (const auto& r : c.rules) {
    if (r.type == "generated") out.push_back(InvestmentRule::generated(U, c.sim.horizon, r.name));
    else if (r.type == "market") {
      auto m = InvestmentRule::market();
      m.name = r.name;
      out.push_back(m);
    } else out.push_back(InvestmentRule::constant(r.weights, r.name));
  }
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return NAN;
  const std::size_t k = std::min(v.size() - 1, static_cast<std::size_t>(q * static_cast<double>(v.size() - 1) + 0.5));
  std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
  return v[k];
}

std::shared_ptr<const GridInterpolator> interpolator(const Solution& s) {
  return std::make_shared<const GridInterpolator>(s.value);
}

void do_backtest(Ctx& ctx, const fs::path& dir, const std::shared_ptr<const GridInterpolator>& U) {
  const auto& c = ctx.cfg;
  const auto models = primal_models(c);
  const auto lf_flags = least_favorable_flags(c);
  const auto rules = make_rules(c, U);
  const double u0 = U->value(c.sim.horizon, c.x0);
  SimConfig s = c.sim;
  s.seed = ctx.seed("backtest", 2);
  json out = json::array();
  for (const auto& rule : rules) {
    // the generated rule starts from the capital U(T, x0) X(0)
    const double v0 = rule.kind == RuleKind::Generated ? u0 * c.x0.sum() : c.x0.sum();
    for (const auto& model : models) {
      const auto l = backtest(rule, model, c.x0, v0, s);
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < l.obs_times.size(); ++k) {
        std::vector<double> ratio;
        for (std::size_t p = 0; p < l.wealth.size(); ++p) ratio.push_back(l.wealth[p][k] / l.market[p][k]);
        const auto m = mean_of(ratio);
        rows.push_back({l.obs_times[k], m.mean, m.std_error, quantile(ratio, 0.05), quantile(ratio, 0.5), quantile(ratio, 0.95)});
      }
      write_csv(dir / ("wealth_" + slug(rule.name) + "_" + slug(model.name) + ".csv"),
                {"t", "mean_Z_over_X", "stderr", "p05", "p50", "p95"}, rows);
      json j = to_json(l);
      j["v0"] = v0;
      out.push_back(j);
      if (rule.kind == RuleKind::Generated) {
        // under the least favourable model Z(T) = X(T) up to hedging error, so the count is a coin flip
        const bool lf = lf_flags[static_cast<std::size_t>(&model - models.data())];
        ctx.check({"backtest.outperform." + rule.name + "." + model.name,
                   l.outperform_fraction() >= c.checks.outperform_fraction, !lf, l.outperform_fraction(),
                   c.checks.outperform_fraction, 0.0, "fraction of paths with Z(T) >= X(T)"});
      }
    }
  }
  ctx.report["backtest"] = {{"u_at_x0", u0}, {"ledgers", out}};

  // Xi trends: constant under the least favourable model, nonincreasing otherwise.
  SimConfig t = c.sim;
  t.seed = ctx.seed("trend", 4);
  t.keep_paths = true;
  json trends = json::array();
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto kind = lf_flags[m] ? TrendKind::Constant : TrendKind::Nonincreasing;
    const auto r = supermartingale_check(models[m], *U, c.x0, t, kind, c.checks.sigmas);
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
      const double band = c.checks.sigmas * r.stderrs[k];
      rows.push_back({r.times[k], r.means[k], r.stderrs[k], r.means[k] - band, r.means[k] + band, static_cast<double>(r.counts[k])});
    }
    write_csv(dir / ("xi_trend_" + slug(models[m].name) + ".csv"), {"t", "mean", "stderr", "lower", "upper", "paths"}, rows);
    json j = to_json(r);
    j["model"] = models[m].name;
    trends.push_back(j);
    ctx.check({"trend." + models[m].name, r.pass, true, r.means.back(), r.means.front(), c.checks.sigmas,
               kind == TrendKind::Constant ? "Xi constant in mean" : "Xi nonincreasing in mean"});
  }
  ctx.report["trends"] = trends;
}

void do_game(Ctx& ctx, const fs::path& dir, const std::shared_ptr<const GridInterpolator>& U) {
  const auto& c = ctx.cfg;
  const auto models = primal_models(c);
  const auto rules = make_rules(c, U);
  SimConfig s = c.sim;
  s.seed = ctx.seed("game", 3);
  const auto r = saddle_check(*U, c.x0, s, models, rules, c.checks.saddle);
  std::vector<std::string> header = {"rule"};
  for (const auto& m : r.models) header.push_back(m);
  auto table = [&](const std::string& file, auto get) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < r.rules.size(); ++i) {
      std::vector<std::string> row = {r.rules[i]};
      for (const auto& cell : r.cells[i]) row.push_back(format_double(get(cell)));
      rows.push_back(std::move(row));
    }
    write_text_csv(dir / file, header, rows);
  };
  table("xi_hat.csv", [](const GameValue& g) { return g.xi_hat; });
  table("xi_p50.csv", [](const GameValue& g) { return g.p50; });
  table("xi_p99.csv", [](const GameValue& g) { return g.p99; });
  const double v = r.cells[0][0].xi_hat;
  ctx.check({"game.value", r.value_ok, true, v, r.u_star, c.checks.saddle.value, "xi(pi_o, M_o) against U(T, x0)"});
  ctx.check({"game.column", r.column_ok, true, v, v, c.checks.saddle.column, "no model beats the least favourable one"});
  ctx.check({"game.row", r.row_ok, true, v, v, c.checks.saddle.row, "no rule beats the generated one"});
  ctx.report["game"] = to_json(r);
}

void do_check_sets(Ctx& ctx) {
  const auto& c = ctx.cfg;
  const int n = c.family->dimension();
  std::mt19937_64 rng(c.seed.value_or(0));
  const double lo = c.grid.lower.empty() ? -3.0 : c.grid.lower[0];
  const double hi = c.grid.upper.empty() ? 3.0 : c.grid.upper[0];
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Vec> probes;
  for (int k = 0; k < c.probes; ++k) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z[i] = std::exp(u(rng));
    probes.push_back(z);
  }
  const auto adm = check_admissibility(*c.family, probes, c.scan);
  const auto suf = arbitrage_sufficiency(*c.family, probes, c.scan);
  for (const auto& e : adm.entries)
    ctx.check({"admissibility." + e.name, e.pass, true, e.worst, e.threshold, 0.0, ""});
  ctx.check({"sufficiency.certified", suf.weight_gap_zeta.has_value() || suf.diversity_zeta.has_value(), false,
             suf.weight_gap_inf, 0.0, 0.0, "u(T, x) < 1 certified by a positive infimum"});
  ctx.report["check_sets"] = {{"family", c.family->kind_name()},
                              {"probes", c.probes},
                              {"admissibility", to_json(adm)},
                              {"sufficiency", to_json(suf)}};
}

struct Delta {
  std::string name;
  double a, b, tol;
  bool pass() const { return std::abs(a - b) <= tol; }
};

void do_full_pipeline(Ctx& ctx) {
  const auto& c = ctx.cfg;
  const auto& d = ctx.dir;
  do_check_sets(ctx);
  const auto hjb = do_hjb(ctx, d);
  const auto lin = do_linear(ctx, d);
  const double u_hjb = at_x0(hjb.value, c.x0);
  const double u_lin = at_x0(lin.value, c.x0);
  double worst = 0.0;
  std::vector<int> idx(static_cast<std::size_t>(c.grid.dimension));
  for (std::size_t p = 0; p < c.grid.node_count(); ++p) {
    c.grid.unflatten(p, idx.data());
    if (c.grid.is_interior(idx.data())) worst = std::max(worst, std::abs(hjb.value.last()[p] - lin.value.last()[p]));
  }
  const auto orc = do_oracle(ctx);
  const auto q = do_containment(ctx, d);
  const auto U = interpolator(hjb);
  do_backtest(ctx, d, U);
  do_game(ctx, d, U);

  const double rel = c.checks.oracle_rel_tol;
  std::vector<Delta> deltas = {
      {"hjb_vs_linear_at_x0", u_hjb, u_lin, 1e-3},
      {"hjb_vs_linear_max_interior", worst, 0.0, 1e-3},
      {"pde_vs_oracle", u_lin, orc.u_hat, std::max(rel * u_lin, c.checks.sigmas * orc.std_error)},
      {"containment_vs_pde", q.q_hat, u_lin, std::max(rel * u_lin, c.checks.sigmas * q.std_error)},
      {"game_value_vs_pde", ctx.report["game"]["cells"][0][0]["xi_hat"].is_number()
                                ? ctx.report["game"]["cells"][0][0]["xi_hat"].get<double>()
                                : NAN,
       u_hjb, c.checks.saddle.value},
  };
  std::vector<std::vector<std::string>> rows;
  for (const auto& x : deltas) {
    rows.push_back({x.name, format_double(x.a), format_double(x.b), format_double(std::abs(x.a - x.b)),
                    format_double(x.tol), x.pass() ? "pass" : "fail"});
    ctx.check({"cross." + x.name, x.pass(), true, x.a, x.b, x.tol, ""});
  }
  write_text_csv(d / "summary.csv", {"check", "a", "b", "delta", "tolerance", "status"}, rows);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json effective_config(const RunConfig& c) {
  json models = json::array(), rules = json::array();
  for (const auto& m : c.models) models.push_back({{"type", m.type}, {"eta", m.eta}, {"eta_slope", m.eta_slope}, {"zeta", m.zeta}, {"name", m.name}});
  for (const auto& r : c.rules) rules.push_back({{"type", r.type}, {"weights", to_json(r.weights)}, {"name", r.name}});
  json j = {{"kind", to_string(c.kind)},
            {"family", c.family_json},
            {"family_kind", c.family->kind_name()},
            {"scan", {{"eta_samples", c.scan.eta_samples}, {"zeta_samples", c.scan.zeta_samples}}},
            {"solver",
             {{"boundary", to_string(c.solver.boundary.mode)},
              {"floor", c.solver.boundary.floor},
              {"drift", to_string(c.solver.drift)},
              {"max_retained", c.solver.max_retained},
              {"cfl_safety", c.solver.cfl_safety}}},
            {"sim", to_json(c.sim)},
            {"x0", to_json(c.x0)},
            {"models", models},
            {"rules", rules}};
  if (c.grid.dimension <= 3) j["grid"] = to_json(c.grid);
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

} // namespace

RunOutcome run(const RunConfig& cfg) {
  if (is_stochastic(cfg.kind) && !cfg.seed)
    throw ConfigError("seed", "mandatory for " + to_string(cfg.kind) + " (set it in the config or pass --seed)");
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  Ctx ctx{cfg, dir};

  switch (cfg.kind) {
  case Experiment::SolveHjb: do_hjb(ctx, dir); break;
  case Experiment::SolveLinear: do_linear(ctx, dir); break;
  case Experiment::SolvePucci: do_pucci(ctx, dir); break;
  case Experiment::Containment: do_containment(ctx, dir); break;
  case Experiment::Oracle: do_oracle(ctx); break;
  case Experiment::Backtest: {
    ctx.report["note"] = "U from solve-hjb on the configured grid";
    do_backtest(ctx, dir, interpolator(do_hjb(ctx, dir)));
    break;
  }
  case Experiment::Game: do_game(ctx, dir, interpolator(do_hjb(ctx, dir))); break;
  case Experiment::CheckSets: do_check_sets(ctx); break;
  case Experiment::FullPipeline: do_full_pipeline(ctx); break;
  }

  RunOutcome out{dir, ctx.checks};
  json checks = json::array();
  for (const auto& c : ctx.checks) checks.push_back(check_json(c));
  ctx.report["experiment"] = to_string(cfg.kind);
  ctx.report["checks"] = checks;
  ctx.report["pass"] = out.pass();
  write_json(dir / "report.json", ctx.report);

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const json manifest = {{"tool", "robarb"},
                         {"version", ROBARB_VERSION},
                         {"experiment", to_string(cfg.kind)},
                         {"config", cfg.source},
                         {"effective", effective_config(cfg)},
                         {"seeds", ctx.seeds},
                         {"cfl", ctx.cfl},
                         {"files", files},
                         {"pass", out.pass()},
                         // timestamp fields: the only entries that differ between reruns
                         {"timing", {{"started_utc", started}, {"wall_seconds", wall}, {"threads", cfg.threads}}}};
  write_json(dir / "manifest.json", manifest);
  return out;
}

} // namespace robarb::cli
