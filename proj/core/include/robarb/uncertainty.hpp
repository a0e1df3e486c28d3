#pragma once

#include "robarb/linalg.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace robarb {

// One (relative risk, covariance) pair of an uncertainty set.
struct Candidate {
  Vec theta;
  Mat a;
};

// Diagonal covariances with y_i a_ii = eta^2 (y_1 + ... + y_n), eta in
// [1, 1 + delta], and theta_i = zeta sqrt(a_ii) with zeta in [sqrt(c1), sqrt(c2)].
struct VolStabBand {
  double delta = 0.0;
  double c1 = 1.0;
  double c2 = 2.0;
};

// Explicit generator pairs. `rule` (when set) produces the generators at a
// point; otherwise `constant` is used everywhere.
struct FiniteList {
  std::vector<Candidate> constant;
  std::function<std::vector<Candidate>(const Vec& y)> rule;
  bool scale_invariant = true; // meaningful only when `rule` is set
};

// Diagonal covariances with lower_i <= y_i a_ii / (y_1 + ... + y_n) <= upper_i,
// theta_i = zeta sqrt(a_ii) with zeta in [sqrt(c1), sqrt(c2)].
struct DiagonalInterval {
  Vec lower;
  Vec upper;
  double c1 = 1.0;
  double c2 = 2.0;
};

// Sampling resolution of the sup over an uncertainty set. Interval endpoints
// are always sampled; a degenerate interval yields a single sample.
struct CandidateScan {
  int eta_samples = 2;
  int zeta_samples = 2;
};

class UncertaintySetFamily {
public:
  using Kind = std::variant<VolStabBand, FiniteList, DiagonalInterval>;

  UncertaintySetFamily(int dimension, Kind kind, double growth_constant);

  int dimension() const noexcept { return dimension_; }
  double growth_constant() const noexcept { return growth_constant_; }
  const Kind& kind() const noexcept { return kind_; }
  std::string kind_name() const;

  // A(lambda y) = A(y) for every lambda > 0.
  bool scale_invariant() const;

  // Full (theta, a) candidates at y, ordered so that covariance parameters
  // vary slowest (candidate blocks share the same `a`).
  std::vector<Candidate> candidates(const Vec& y, const CandidateScan& scan) const;

  // Distinct covariance matrices of the scan at y, lowest-variance endpoint first.
  std::vector<Mat> covariances(const Vec& y, const CandidateScan& scan) const;

  // Membership test used to spot-check simulated models. `theta` may be
  // empty, in which case only a in A(y) is checked.
  bool contains(const Vec& y, const Vec& theta, const Mat& a, double tol = 1e-9) const;

private:
  int dimension_;
  Kind kind_;
  double growth_constant_;
};

// Sample points on [lo, hi], endpoints included, `count` >= 1. A degenerate
// interval returns {lo}.
std::vector<double> interval_samples(double lo, double hi, int count);

std::vector<Mat> covariance_set(const UncertaintySetFamily& family, const Vec& y,
                                const CandidateScan& scan);

struct ConditionEntry {
  std::string name;
  double worst = 0.0;     // worst ratio (or min Rayleigh quotient for ellipticity)
  double threshold = 0.0; // growth constant, or 0 for ellipticity
  Vec witness;
  bool pass = true;
};

struct ConditionReport {
  std::vector<ConditionEntry> entries;
  bool all_pass() const;
  const ConditionEntry& at(const std::string& name) const;
};

// Empirical worst cases over probe points and every scanned candidate of:
//   linear_growth      max_ij y_i y_j |a_ij| / (sum y) / (1 + |y|)   <= C
//   quadratic_growth   y' a y / (sum y)^2                             <= C
//   shear              |theta|^2/(1+Tr a) + Tr a/(1+|theta|^2)        <= C
//   strong_ellipticity min eigenvalue of a                            >  0
ConditionReport check_admissibility(const UncertaintySetFamily& family,
                                    const std::vector<Vec>& probe_points,
                                    const CandidateScan& scan = {});

struct SufficiencyResult {
  double weight_gap_inf = 0.0; // inf of sum z_i a_ii / X - z'az / X^2
  double diversity_inf = 0.0;  // inf of (prod z)^(1/n)/X * (Tr a - 1'a1/n)
  Vec weight_gap_witness;
  Vec diversity_witness;
  std::optional<double> weight_gap_zeta;
  std::optional<double> diversity_zeta;
};

// Certifies u(T, x) < 1 when either infimum stays above `certify_threshold`.
SufficiencyResult arbitrage_sufficiency(const UncertaintySetFamily& family,
                                        const std::vector<Vec>& probe_points,
                                        const CandidateScan& scan = {},
                                        double certify_threshold = 1e-6);

// Market weights z_i / (z_1 + ... + z_n). The last weight is the complement
// of the others so the weights sum to one in floating point.
Vec market_weights(const Vec& z);

} // namespace robarb
