#pragma once

#include "robarb/grid.hpp"
#include "robarb/uncertainty.hpp"

#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace robarb {

// Truncation boundary treatment.
//  ray:  boundary nodes copy the first interior node along the scaling ray
//        (all log-coordinates shifted together); nodes without such a
//        neighbour use an absorbing Robin rule proportional to the smallest
//        market weight.
//  axis: Dirichlet floor on low edges, zero second normal derivative on
//        high edges.
enum class BoundaryMode { Ray, Axis };

std::string to_string(BoundaryMode m);
BoundaryMode boundary_mode_from_string(const std::string& s);

struct BoundaryOptions {
  BoundaryMode mode = BoundaryMode::Ray;
  double floor = 0.0;
  // Optional (tau, floor) table for axis mode, piecewise linear in tau.
  std::vector<std::pair<double, double>> floor_table;
  double floor_at(double tau) const;
};

// First-order terms: central differences wherever the stencil stays
// monotone (hybrid), or always upwinded on the drift sign.
enum class DriftScheme { Hybrid, Upwind };

std::string to_string(DriftScheme d);
DriftScheme drift_scheme_from_string(const std::string& s);

struct SolverOptions {
  BoundaryOptions boundary;
  DriftScheme drift = DriftScheme::Hybrid;
  double cfl_safety = 0.9;
  int threads = 1;
  int max_retained = 64;
  // Test hook: accept the exact zero matrix as a (degenerate) candidate.
  bool allow_zero_matrix = false;
};

struct SolverStats {
  long steps = 0;
  long required_steps = 0;
  double dtau = 0.0;
  double max_rate = 0.0;   // largest center-weight magnitude of the stencil
  double cfl_number = 0.0; // dtau * max_rate, <= cfl_safety
  long negative_weights = 0; // off-center weights < 0 (non-monotone cross terms)
  int candidates = 1;
  std::string boundary;
  int threads = 1;
  double seconds = 0.0;
};

// Per-node argmax candidate of the sup at each retained level, plus counts
// of the selected index over every (interior node, step) pair.
struct PolicyField {
  GridSpec grid;
  std::vector<double> tau;
  std::vector<std::vector<int>> index;
  std::vector<int> candidate_count; // per node
  std::vector<long> selections;     // per candidate index
  long interior_pairs = 0;
  double fraction_selecting(int candidate) const;
};

struct Solution {
  GridFunction value;
  PolicyField policy;
  SolverStats stats;
};

using CovarianceField = std::function<Mat(const Vec& z)>;

// Linear equation U_tau = sum_ij (1/2) a_ij d_ij U + sum_i (sum_j a_ij z_j / X - a_ii/2) d_i U
// in log coordinates, U(0) = 1.
Solution solve_linear(const CovarianceField& a, const GridSpec& grid, const SolverOptions& opts = {});

// Same operator with a sup over the scanned covariances of the family.
Solution solve_hjb(const UncertaintySetFamily& family, const CandidateScan& scan,
                   const GridSpec& grid, const SolverOptions& opts = {});

// V_tau = (1/2) sup_a sum_ij z_i z_j a_ij D_ij V with V(0, z) = z_1 + ... + z_n.
Solution solve_pucci(const UncertaintySetFamily& family, const CandidateScan& scan,
                     const GridSpec& grid, const SolverOptions& opts = {});

// Explicit time-step budget for a candidate set without solving.
long required_time_steps(const UncertaintySetFamily& family, const CandidateScan& scan,
                         const GridSpec& grid, double cfl_safety = 0.9,
                         DriftScheme drift = DriftScheme::Hybrid);

struct ResidualReport {
  std::vector<double> tau_mid;              // midpoint of each slice pair
  std::vector<std::vector<double>> field;   // residual per pair, NaN on boundary nodes
  double min_residual = 0.0;
  double max_abs_residual = 0.0;
  std::size_t witness_node = 0;
  Vec witness_z;
  double witness_tau = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

// dU/dtau - sup_a (operator applied to U) between consecutive retained
// slices (trapezoidal in tau), on interior nodes. Passes when every value
// is >= -tol. Slices with tau below `skip_below` are excluded.
ResidualReport pdi_residual(const GridFunction& U, const UncertaintySetFamily& family,
                            const CandidateScan& scan, double tol, double skip_below = 0.0,
                            DriftScheme drift = DriftScheme::Hybrid);

} // namespace robarb
