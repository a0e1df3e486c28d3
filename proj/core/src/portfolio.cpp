#include "robarb/portfolio.hpp"

#include "robarb/error.hpp"
#include "robarb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace robarb {

std::string to_string(RuleKind k) {
  switch (k) {
  case RuleKind::Market: return "market";
  case RuleKind::Generated: return "generated";
  case RuleKind::Constant: return "constant";
  default: return "custom";
  }
}

InvestmentRule InvestmentRule::market() { return {}; }

InvestmentRule InvestmentRule::generated(std::shared_ptr<const GridInterpolator> U, double horizon,
                                         std::string name) {
  if (!U) throw InvalidArgument("InvestmentRule", "generated rule needs a grid");
  if (U->function().tag != Quantity::U) throw InvalidArgument("InvestmentRule", "generated rule needs a U grid");
  InvestmentRule r;
  r.kind = RuleKind::Generated;
  r.name = std::move(name);
  r.grid = std::move(U);
  r.horizon = horizon;
  return r;
}

InvestmentRule InvestmentRule::constant(Vec weights, std::string name) {
  InvestmentRule r;
  r.kind = RuleKind::Constant;
  r.name = std::move(name);
  r.weights = std::move(weights);
  return r;
}

InvestmentRule InvestmentRule::from_function(std::function<Vec(double, const Vec&)> f, std::string name) {
  if (!f) throw InvalidArgument("InvestmentRule", "custom rule needs a function");
  InvestmentRule r;
  r.kind = RuleKind::Custom;
  r.name = std::move(name);
  r.custom = std::move(f);
  return r;
}

namespace {

Vec generated_weights(const GridInterpolator::Sample& s, const Vec& z) {
  Vec pi = market_weights(z);
  if (!(s.value > 0.0)) return pi;
  for (Eigen::Index i = 0; i < z.size(); ++i) pi[i] = s.grad[i] / s.value + pi[i];
  return pi;
}

} // namespace

Vec evaluate_rule(const InvestmentRule& rule, double t, const Vec& z, bool* clamped) {
  if (!all_positive(z) || !all_finite(z)) throw InvalidArgument("evaluate_rule", "z must be strictly positive");
  if (clamped) *clamped = false;
  switch (rule.kind) {
  case RuleKind::Market: return market_weights(z);
  case RuleKind::Constant:
    if (rule.weights.size() != z.size()) throw InvalidArgument("evaluate_rule", "constant weights dimension mismatch");
    return rule.weights;
  case RuleKind::Custom: return rule.custom(t, z);
  case RuleKind::Generated: {
    const auto s = rule.grid->first_order(rule.horizon - t, z);
    if (clamped) *clamped = s.clamped;
    return generated_weights(s, z);
  }
  }
  return market_weights(z);
}

double WealthLedger::outperform_fraction() const {
  return terminal_ratio.empty() ? 0.0 : static_cast<double>(outperform) / static_cast<double>(terminal_ratio.size());
}

double WealthLedger::interim_fraction() const {
  return interim_pairs == 0 ? 1.0 : static_cast<double>(interim_hold) / static_cast<double>(interim_pairs);
}

WealthLedger backtest(const InvestmentRule& rule, const MarketModelSpec& model, const Vec& x0,
                      double v0, const SimConfig& cfg, const BacktestOptions& opts) {
  model.validate();
  cfg.validate();
  const int n = model.dimension;
  if (x0.size() != n || !all_positive(x0)) throw InvalidArgument("backtest", "x0 must be a positive vector of the model dimension");
  if (!(v0 > 0.0) || !std::isfinite(v0)) throw InvalidArgument("backtest", "initial capital must be positive");
  if (rule.kind == RuleKind::Generated && rule.grid->function().grid.dimension != n) {
    throw InvalidArgument("backtest", "rule grid dimension does not match the model");
  }

  const bool generated = rule.kind == RuleKind::Generated;
  const bool surplus = generated && opts.track_surplus;
  const bool interim = generated && opts.track_interim;
  WealthLedger led;
  led.rule_name = rule.name;
  led.model_name = model.name;
  led.v0 = v0;
  led.config = cfg;
  led.obs_steps = cfg.observation_steps();
  const double dt = cfg.horizon / static_cast<double>(cfg.steps);
  for (long k : led.obs_steps) led.obs_times.push_back(static_cast<double>(k) * dt);
  const auto M = static_cast<std::size_t>(cfg.paths);
  if (opts.keep_paths) {
    led.wealth.resize(M);
    led.market.resize(M);
    if (surplus) led.surplus.resize(M);
  }
  led.terminal_wealth.assign(M, 0.0);
  led.terminal_market.assign(M, 0.0);
  led.terminal_ratio.assign(M, 0.0);
  led.absorbed_step.assign(M, -1);

  struct Counts {
    long interim_pairs = 0, interim_hold = 0, decreases = 0, ruined = 0, clamped = 0, absorbed = 0;
  };
  std::vector<Counts> counts(M);
  const double x0_total = x0.sum();
  const double T = cfg.horizon;

  parallel_for(M, cfg.threads, [&](std::size_t p) {
    PathStepper st(model, cfg, x0, p);
    Counts c;
    double z_wealth = v0;
    double c_surplus = 0.0;
    bool ruined = false;
    std::size_t next_obs = 0;
    const auto nobs = led.obs_steps.size();
    for (long k = 0; k <= cfg.steps; ++k) {
      const Vec x = st.state();
      const double t = static_cast<double>(k) * dt;
      if (rule.kind == RuleKind::Market) z_wealth = v0 / x0_total * x.sum();

      GridInterpolator::Sample s;
      const bool alive = !st.absorbed();
      if (generated && alive) {
        s = surplus && k < cfg.steps ? rule.grid->sample(T - t, x) : rule.grid->first_order(T - t, x);
        c.clamped += s.clamped ? 1 : 0;
        if (interim) {
          ++c.interim_pairs;
          if (z_wealth >= x.sum() * s.value) ++c.interim_hold;
        }
      }
      if (next_obs < nobs && led.obs_steps[next_obs] == k) {
        if (opts.keep_paths) {
          led.wealth[p].push_back(z_wealth);
          led.market[p].push_back(x.sum());
          if (surplus) led.surplus[p].push_back(c_surplus);
        }
        ++next_obs;
      }
      if (k == cfg.steps) break;

      Vec pi;
      if (rule.kind != RuleKind::Market && alive && !ruined) {
        pi = generated ? generated_weights(s, x) : evaluate_rule(rule, t, x);
      }
      const bool was_alive = alive;
      st.step();
      if (was_alive && st.absorbed()) {
        ++c.absorbed;
        led.absorbed_step[p] = k + 1;
      }
      if (rule.kind != RuleKind::Market && was_alive && !ruined) {
        const Vec& xn = st.state();
        double g = 1.0;
        for (int i = 0; i < n; ++i) g += pi[i] * (xn[i] / x[i] - 1.0);
        if (!(g > 0.0)) {
          ruined = true;
          z_wealth = 0.0;
          ++c.ruined;
        } else {
          z_wealth *= g;
        }
      }
      if (surplus && was_alive && s.value > 0.0) {
        const Mat& a = st.last_covariance();
        const double xs = x.sum();
        double lu = 0.0;
        for (int i = 0; i < n; ++i) {
          double ci = -0.5 * a(i, i);
          for (int j = 0; j < n; ++j) {
            lu += 0.5 * a(i, j) * s.hess(i, j);
            ci += a(i, j) * x[j] / xs;
          }
          lu += ci * s.grad[i];
        }
        const double delta = lu - s.dtau;
        const double inc = -delta / s.value * dt;
        if (inc < -opts.surplus_tol) ++c.decreases;
        c_surplus += inc;
      }
    }
    led.terminal_wealth[p] = z_wealth;
    led.terminal_market[p] = st.state().sum();
    led.terminal_ratio[p] = z_wealth / st.state().sum();
    counts[p] = c;
  });

  for (std::size_t p = 0; p < M; ++p) {
    if (led.terminal_wealth[p] >= led.terminal_market[p]) ++led.outperform;
    led.interim_pairs += counts[p].interim_pairs;
    led.interim_hold += counts[p].interim_hold;
    led.surplus_decreases += counts[p].decreases;
    led.ruined += counts[p].ruined;
    led.clamped += counts[p].clamped;
    led.absorbed += counts[p].absorbed;
  }
  return led;
}

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(v.size() - 1, lo + 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0) return v[lo];
  return v[lo] + w * (v[hi] - v[lo]);
}

} // namespace

GameValue game_value(const InvestmentRule& rule, const MarketModelSpec& model, const Vec& x0,
                     const SimConfig& cfg) {
  BacktestOptions opts;
  opts.track_surplus = false;
  opts.track_interim = false;
  opts.keep_paths = false;
  const auto led = backtest(rule, model, x0, x0.sum(), cfg, opts);
  GameValue g;
  g.paths = static_cast<long>(led.terminal_ratio.size());
  g.ruined = led.ruined;
  std::vector<double> ratios;
  ratios.reserve(led.terminal_ratio.size());
  double sum = 0.0;
  for (std::size_t p = 0; p < led.terminal_ratio.size(); ++p) {
    if (led.absorbed_step[p] >= 0) {
      ++g.absorbed;
      continue;
    }
    const double z = led.terminal_wealth[p];
    ratios.push_back(z > 0.0 ? led.terminal_market[p] / z : std::numeric_limits<double>::infinity());
    sum += ratios.back();
  }
  if (ratios.empty()) {
    g.xi_hat = g.p50 = g.p99 = g.p999 = g.mean = std::numeric_limits<double>::quiet_NaN();
    return g;
  }
  g.mean = sum / static_cast<double>(ratios.size());
  g.xi_hat = *std::max_element(ratios.begin(), ratios.end());
  g.p50 = quantile(ratios, 0.5);
  g.p99 = quantile(ratios, 0.99);
  g.p999 = quantile(ratios, 0.999);
  return g;
}

SaddleReport saddle_check(const GridInterpolator& U_star, const Vec& x0, const SimConfig& cfg,
                          const std::vector<MarketModelSpec>& models,
                          const std::vector<InvestmentRule>& rules, const SaddleTolerances& tol) {
  if (models.empty() || rules.empty()) throw InvalidArgument("saddle_check", "need at least one rule and one model");
  SaddleReport r;
  r.tol = tol;
  r.u_star = U_star.value(cfg.horizon, x0);
  for (const auto& m : models) r.models.push_back(m.name);
  for (const auto& ru : rules) r.rules.push_back(ru.name);
  for (const auto& ru : rules) {
    std::vector<GameValue> row;
    for (const auto& m : models) row.push_back(game_value(ru, m, x0, cfg));
    r.cells.push_back(std::move(row));
  }
  const double xi_oo = r.cells[0][0].xi_hat;
  if (std::abs(xi_oo - r.u_star) > tol.value) {
    r.value_ok = false;
    r.witnesses.push_back("value: xi(" + r.rules[0] + ", " + r.models[0] + ") = " + std::to_string(xi_oo) +
                          " vs U = " + std::to_string(r.u_star));
  }
  for (std::size_t j = 1; j < models.size(); ++j) {
    if (r.cells[0][j].xi_hat > xi_oo + tol.column) {
      r.column_ok = false;
      r.witnesses.push_back("column: model " + r.models[j] + " gives " + std::to_string(r.cells[0][j].xi_hat));
    }
  }
  for (std::size_t i = 1; i < rules.size(); ++i) {
    if (r.cells[i][0].xi_hat < xi_oo - tol.row) {
      r.row_ok = false;
      r.witnesses.push_back("row: rule " + r.rules[i] + " gives " + std::to_string(r.cells[i][0].xi_hat));
    }
  }
  return r;
}

} // namespace robarb
