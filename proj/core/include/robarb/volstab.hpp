#pragma once

#include "robarb/hjb.hpp"
#include "robarb/sde.hpp"
#include "robarb/uncertainty.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <random>

namespace robarb {

// Volatility-stabilized family: z_i a_ii = eta^2 (z_1 + ... + z_n).
std::shared_ptr<const UncertaintySetFamily> volstab_family(int n, double delta = 0.0, double c1 = 1.0,
                                                           double c2 = 2.0, double growth_constant = 6.0);

// diag(eta2 * X / z_i)
Mat volstab_covariance(const Vec& z, double eta2 = 1.0);

// a_ii = X/z_i, theta_i = sqrt(a_ii); the drift of X_i is X.
MarketModelSpec least_favorable_model(int n, std::shared_ptr<const UncertaintySetFamily> family = nullptr);

// Auxiliary (containment) dynamics with the volstab covariance scaled by eta^2.
MarketModelSpec auxiliary_model(int n, double eta = 1.0,
                                std::shared_ptr<const UncertaintySetFamily> family = nullptr);

// In-band primal models: a = eta^2 volstab, theta = zeta sqrt(a_ii).
MarketModelSpec perturbed_model(int n, double eta, double zeta = 1.0,
                                std::shared_ptr<const UncertaintySetFamily> family = nullptr);
MarketModelSpec perturbed_model(int n, std::function<double(double, const Vec&)> eta, std::string name,
                                double zeta = 1.0, std::shared_ptr<const UncertaintySetFamily> family = nullptr);

// Reference solution of the example's linear equation; tagged scale invariant.
Solution solve_example_pde(const GridSpec& grid, const SolverOptions& opts = {});

// Exact BESQ(4) transition over a clock increment h.
double besq4_step(double psi, double h, std::mt19937_64& rng, std::normal_distribution<double>& normal);

struct OracleOptions {
  double u_step_fraction = 1e-3; // u-step as a fraction of the pilot mean clock
  double u_step = 0.0;           // explicit u-step; overrides the pilot when > 0
  long pilot_paths = 1000;
  int threads = 1;
  bool keep_ensemble = false;
};

struct BesqEnsemble {
  int dimension = 2;
  std::vector<double> terminal_x; // paths x n, X(T) = Psi(A(T))
  std::vector<double> clock;      // A(T)
  std::vector<long> steps;        // u-steps taken
  double max_bracket_error = 0.0; // worst |t(u*) - T|
  double min_psi = 0.0;
};

struct OracleResult {
  double u_hat = 0.0;
  double std_error = 0.0;
  long paths = 0;
  std::uint64_t seed = 0;
  double u_step = 0.0;
  long pilot_paths = 0;
  double pilot_mean_clock = 0.0;
  double mean_clock = 0.0;
  double clock_std_error = 0.0;
  double mean_steps = 0.0;
  BesqEnsemble ensemble; // populated when keep_ensemble
};

// (prod z / sum z) E[ sum X(T) / prod X(T) ] under the least favorable model,
// simulated through the BESQ(4) time change.
OracleResult oracle_u(const Vec& z0, double T, long paths, std::uint64_t seed, const OracleOptions& opts = {});

// The same functional from any PathBundle's terminal states (absorbed paths contribute 0).
MeanEstimate arbitrage_functional(const PathBundle& b);

} // namespace robarb
