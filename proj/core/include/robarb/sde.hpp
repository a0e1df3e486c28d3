#pragma once

#include "robarb/grid.hpp"
#include "robarb/uncertainty.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace robarb {

enum class ModelMode { Primal, Auxiliary };
enum class Scheme { EulerFullTruncation, LogEuler };

std::string to_string(ModelMode m);
std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

// Markovian model: covariance a(t, z) of log returns, optional square root
// (defaults to the Cholesky factor), relative risk theta(t, z).
struct MarketModelSpec {
  std::string name = "model";
  int dimension = 2;
  ModelMode mode = ModelMode::Primal;
  std::function<Mat(double, const Vec&)> covariance;
  std::function<Mat(double, const Vec&)> sqrt_covariance;
  std::function<Vec(double, const Vec&)> theta;
  // Optional family for spot checks of (theta, a) in K(z).
  std::shared_ptr<const UncertaintySetFamily> family;
  // Spot-check every this many steps along each path (0 disables).
  long check_every = 64;
  double check_tol = 1e-9;

  void validate() const;
};

// a == 0, theta == 0.
MarketModelSpec frozen_model(int n, ModelMode mode = ModelMode::Primal);

struct SimConfig {
  double horizon = 1.0;
  long steps = 1000;
  long paths = 1000;
  std::uint64_t seed = 0;
  double absorb_eps = 1e-6;
  Scheme scheme = Scheme::EulerFullTruncation;
  int threads = 1;
  // Observation stride in steps; 0 mirrors the solver's ceil(K/64) rule.
  long observe_every = 0;
  bool keep_paths = true;

  void validate() const;
  long observation_stride() const;
  std::vector<long> observation_steps() const;
};

// Per-path RNG stream: mt19937_64 seeded from (seed, path).
std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t path);

struct PathRecord {
  std::vector<double> x;      // obs x n, row-major
  std::vector<double> deflator; // L(t_k); NaN in auxiliary mode
  std::vector<double> lambda; // X(0)/(L X); 0 after absorption; NaN in auxiliary mode
  std::vector<double> clock;  // A(t_k) = (1/4) int X ds
  long absorbed_step = -1;
};

struct PathBundle {
  std::string model_name;
  ModelMode mode = ModelMode::Primal;
  int dimension = 2;
  SimConfig config;
  Vec x0;
  std::vector<long> obs_steps;
  std::vector<double> obs_times;
  std::vector<PathRecord> paths;
  // Always kept, even when keep_paths is false.
  std::vector<double> terminal_x; // paths x n
  std::vector<double> terminal_clock;
  std::vector<long> absorbed_step;
  long constraint_checks = 0;

  std::size_t obs_count() const { return obs_steps.size(); }
  Vec state(std::size_t path, std::size_t obs) const;
  Vec terminal(std::size_t path) const;
  Vec weights(std::size_t path, std::size_t obs) const { return market_weights(state(path, obs)); }
  bool alive(std::size_t path, std::size_t obs) const;
  long absorbed_count() const;
};

// One path of a model; simulate and backtest both drive paths through this
// class so identical seeds give identical Brownian increments.
class PathStepper {
public:
  PathStepper(const MarketModelSpec& model, const SimConfig& cfg, const Vec& x0, std::uint64_t path);

  // Advances one step; returns false once the path is absorbed.
  bool step();
  long index() const noexcept { return k_; }
  double time() const noexcept { return t_; }
  const Vec& state() const noexcept { return x_; }
  const Vec& previous() const noexcept { return prev_; }
  bool absorbed() const noexcept { return absorbed_; }
  double log_deflator() const noexcept { return log_l_; }
  double clock() const noexcept { return clock_; }
  // Covariance used in the last step (at the previous state).
  const Mat& last_covariance() const noexcept { return a_; }
  long checks() const noexcept { return checks_; }

private:
  const MarketModelSpec& model_;
  const SimConfig& cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  Vec x_, prev_;
  Mat a_;
  double x0_total_;
  double dt_, sqdt_;
  double t_ = 0.0;
  long k_ = 0;
  bool absorbed_ = false;
  double log_l_ = 0.0;
  double clock_ = 0.0;
  long checks_ = 0;
};

PathBundle simulate(const MarketModelSpec& model, const Vec& x0, const SimConfig& cfg);

struct ContainmentEstimate {
  double q_hat = 1.0;
  double std_error = 0.0;
  long paths = 0;
  long absorbed = 0;
};

ContainmentEstimate containment_probability(const MarketModelSpec& model, const Vec& x0,
                                            const SimConfig& cfg);

enum class TrendKind { Constant, Nonincreasing };

struct TrendReport {
  TrendKind kind = TrendKind::Nonincreasing;
  std::vector<double> times;
  std::vector<double> means;
  std::vector<double> stderrs;
  std::vector<long> counts; // paths contributing (not yet absorbed)
  std::vector<double> witness_times;
  long clamped = 0;
  long absorbed = 0;
  double sigmas = 3.0;
  bool pass = true;
};

// Means of Xi(t) = L(t) X(t) U(T - t, X(t)) over the paths alive at each
// observation (auxiliary models use Xi(t) = U(T - t, X(t)) with absorbed
// paths contributing 0). Constant: |mean_k - Xi(0)| <= sigmas * se_k. Nonincreasing:
// mean_k - mean_j <= sigmas * se(paired difference) for every j < k.
TrendReport supermartingale_check(const MarketModelSpec& model, const GridFunction& U,
                                  const Vec& x0, const SimConfig& cfg,
                                  TrendKind kind = TrendKind::Nonincreasing, double sigmas = 3.0);
TrendReport supermartingale_check(const MarketModelSpec& model, const GridInterpolator& U,
                                  const Vec& x0, const SimConfig& cfg,
                                  TrendKind kind = TrendKind::Nonincreasing, double sigmas = 3.0);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long count = 0;
};
MeanEstimate mean_of(const std::vector<double>& v);

} // namespace robarb
