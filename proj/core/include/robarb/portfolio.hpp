#pragma once

#include "robarb/grid.hpp"
#include "robarb/sde.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace robarb {

enum class RuleKind { Market, Generated, Constant, Custom };

std::string to_string(RuleKind k);

// Portfolio proportions pi(t, z); 1 - sum(pi) is held in cash.
struct InvestmentRule {
  RuleKind kind = RuleKind::Market;
  std::string name = "market";
  Vec weights;                                  // constant rules
  std::shared_ptr<const GridInterpolator> grid; // generated rules
  double horizon = 0.0;                         // generated rules: U is read at horizon - t
  std::function<Vec(double, const Vec&)> custom;

  static InvestmentRule market();
  static InvestmentRule generated(std::shared_ptr<const GridInterpolator> U, double horizon,
                                  std::string name = "generated");
  static InvestmentRule constant(Vec weights, std::string name = "constant");
  static InvestmentRule from_function(std::function<Vec(double, const Vec&)> f, std::string name);
};

// Throws on nonpositive z. `clamped` (optional) reports grid clamping.
Vec evaluate_rule(const InvestmentRule& rule, double t, const Vec& z, bool* clamped = nullptr);

struct BacktestOptions {
  bool track_surplus = true; // generated rules only
  bool track_interim = true; // generated rules only: Z(t) >= X(t) U(T - t, X(t))
  bool keep_paths = true;
  double surplus_tol = 1e-9; // slack when counting decreases of C
};

struct WealthLedger {
  std::string rule_name;
  std::string model_name;
  double v0 = 0.0;
  SimConfig config;
  std::vector<long> obs_steps;
  std::vector<double> obs_times;
  // Per path, per observation (only when keep_paths).
  std::vector<std::vector<double>> wealth;
  std::vector<std::vector<double>> market;
  std::vector<std::vector<double>> surplus;
  // Per path, always.
  std::vector<double> terminal_wealth;
  std::vector<double> terminal_market;
  std::vector<double> terminal_ratio; // Z(T) / X(T)
  std::vector<long> absorbed_step;    // -1 when the path survives
  long outperform = 0;                // paths with Z(T) >= X(T)
  long interim_pairs = 0;
  long interim_hold = 0;
  long surplus_decreases = 0;         // (path, step) pairs with C falling by more than tol
  long ruined = 0;                    // paths where one rebalancing step wiped out the wealth
  long clamped = 0;
  long absorbed = 0;

  double outperform_fraction() const;
  double interim_fraction() const;
};

WealthLedger backtest(const InvestmentRule& rule, const MarketModelSpec& model, const Vec& x0,
                      double v0, const SimConfig& cfg, const BacktestOptions& opts = {});

// Statistics of X(T) / Z(T) with Z(0) = X(0) over the paths that were not
// absorbed (for primal models absorption is a discretization event).
struct GameValue {
  double xi_hat = 0.0; // ensemble maximum
  double p50 = 0.0;
  double p99 = 0.0;
  double p999 = 0.0;
  double mean = 0.0;
  long ruined = 0;
  long absorbed = 0; // excluded paths
  long paths = 0;
};

GameValue game_value(const InvestmentRule& rule, const MarketModelSpec& model, const Vec& x0,
                     const SimConfig& cfg);

struct SaddleTolerances {
  double value = 0.05;  // |xi(pi_o, M_o) - U(T, x0)|
  double column = 0.01; // xi(pi_o, M) <= xi(pi_o, M_o) + column
  double row = 0.01;    // xi(Pi, M_o) >= xi(pi_o, M_o) - row
};

struct SaddleReport {
  std::vector<std::string> rules;
  std::vector<std::string> models;
  std::vector<std::vector<GameValue>> cells; // [rule][model]
  double u_star = 0.0;
  SaddleTolerances tol;
  bool value_ok = true;
  bool column_ok = true;
  bool row_ok = true;
  std::vector<std::string> witnesses;
  bool pass() const { return value_ok && column_ok && row_ok; }
};

// rules[0] is the candidate optimal rule and models[0] the candidate least
// favorable model. Every model shares the same seed, hence the same noise.
SaddleReport saddle_check(const GridInterpolator& U_star, const Vec& x0, const SimConfig& cfg,
                          const std::vector<MarketModelSpec>& models,
                          const std::vector<InvestmentRule>& rules, const SaddleTolerances& tol = {});

} // namespace robarb
