#include "robarb/uncertainty.hpp"

#include "robarb/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace robarb {

namespace {

void require_positive(const Vec& y, const char* ctx) {
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0) || !std::isfinite(y[i])) {
      throw InvalidArgument(ctx, "point has nonpositive or nonfinite component " +
                                     std::to_string(i));
    }
  }
}

double total(const Vec& y) {
  double x = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) x += y[i];
  return x;
}

// theta_i = zeta sqrt(a_ii) for a diagonal a, one candidate per zeta sample.
void append_zeta_candidates(std::vector<Candidate>& out, const Mat& a, double c1,
                            double c2, int zeta_samples) {
  const auto zetas = interval_samples(std::sqrt(c1), std::sqrt(c2), zeta_samples);
  for (double zeta : zetas) {
    Vec theta(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) theta[i] = zeta * std::sqrt(a(i, i));
    out.push_back({theta, a});
  }
}

bool zeta_matches(const Vec& theta, const Mat& a, double c1, double c2, double tol) {
  if (theta.size() == 0) return true;
  double zeta = -1.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double r = theta[i] / std::sqrt(a(i, i));
    if (zeta < 0.0) {
      zeta = r;
    } else if (std::abs(r - zeta) > tol * std::max(1.0, zeta)) {
      return false;
    }
  }
  return zeta >= std::sqrt(c1) - tol && zeta <= std::sqrt(c2) + tol;
}

bool is_diagonal(const Mat& a, double tol) {
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (i != j && std::abs(a(i, j)) > tol) return false;
  return true;
}

} // namespace

std::vector<double> interval_samples(double lo, double hi, int count) {
  if (count < 1) throw InvalidArgument("interval_samples", "empty scan");
  if (hi < lo) throw InvalidArgument("interval_samples", "upper bound below lower bound");
  if (hi == lo || count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] = lo + (hi - lo) * static_cast<double>(k) / (count - 1);
  }
  out.back() = hi;
  return out;
}

UncertaintySetFamily::UncertaintySetFamily(int dimension, Kind kind, double growth_constant)
    : dimension_(dimension), kind_(std::move(kind)), growth_constant_(growth_constant) {
  const char* ctx = "UncertaintySetFamily";
  if (dimension_ < 2 || dimension_ > kMaxAssets) {
    throw InvalidArgument(ctx, "dimension must lie in [2, " + std::to_string(kMaxAssets) + "]");
  }
  if (!(growth_constant_ > 0.0)) throw InvalidArgument(ctx, "growth_constant must be positive");
  if (const auto* v = std::get_if<VolStabBand>(&kind_)) {
    if (!(v->delta >= 0.0)) throw InvalidArgument(ctx, "volstab_band.delta must be >= 0");
    if (!(v->c1 > 0.0 && v->c1 <= 1.0)) throw InvalidArgument(ctx, "volstab_band.c1 must lie in (0, 1]");
    if (!(v->c2 > 1.0)) throw InvalidArgument(ctx, "volstab_band.c2 must exceed 1");
  } else if (const auto* f = std::get_if<FiniteList>(&kind_)) {
    if (!f->rule && f->constant.empty()) throw InvalidArgument(ctx, "finite_list has no generators");
    for (const auto& c : f->constant) {
      if (c.a.rows() != dimension_ || c.a.cols() != dimension_ ||
          (c.theta.size() != 0 && c.theta.size() != dimension_)) {
        throw InvalidArgument(ctx, "finite_list generator has wrong dimension");
      }
      if (!is_symmetric(c.a)) throw InvalidArgument(ctx, "finite_list generator is not symmetric");
    }
  } else {
    const auto& d = std::get<DiagonalInterval>(kind_);
    if (d.lower.size() != dimension_ || d.upper.size() != dimension_) {
      throw InvalidArgument(ctx, "diagonal_interval bounds have wrong dimension");
    }
    for (int i = 0; i < dimension_; ++i) {
      if (!(d.lower[i] > 0.0 && d.upper[i] >= d.lower[i])) {
        throw InvalidArgument(ctx, "diagonal_interval needs 0 < lower <= upper");
      }
    }
    if (!(d.c1 > 0.0 && d.c2 >= d.c1)) throw InvalidArgument(ctx, "diagonal_interval needs 0 < c1 <= c2");
  }
}

std::string UncertaintySetFamily::kind_name() const {
  switch (kind_.index()) {
  case 0: return "volstab_band";
  case 1: return "finite_list";
  default: return "diagonal_interval";
  }
}

bool UncertaintySetFamily::scale_invariant() const {
  if (const auto* f = std::get_if<FiniteList>(&kind_)) return f->rule ? f->scale_invariant : true;
  return true;
}

std::vector<Candidate> UncertaintySetFamily::candidates(const Vec& y,
                                                        const CandidateScan& scan) const {
  if (y.size() != dimension_) throw InvalidArgument("candidates", "point dimension mismatch");
  require_positive(y, "candidates");
  std::vector<Candidate> out;
  const double x = total(y);
  if (const auto* v = std::get_if<VolStabBand>(&kind_)) {
    for (double eta : interval_samples(1.0, 1.0 + v->delta, scan.eta_samples)) {
      Mat a = Mat::Zero(dimension_, dimension_);
      const double e2 = eta * eta;
      for (int i = 0; i < dimension_; ++i) a(i, i) = e2 * x / y[i];
      append_zeta_candidates(out, a, v->c1, v->c2, scan.zeta_samples);
    }
  } else if (const auto* f = std::get_if<FiniteList>(&kind_)) {
    out = f->rule ? f->rule(y) : f->constant;
    if (out.empty()) throw InvalidArgument("candidates", "finite_list rule returned no generators");
    for (auto& c : out) {
      if (c.theta.size() == 0) c.theta = Vec::Zero(dimension_);
    }
  } else {
    const auto& d = std::get<DiagonalInterval>(kind_);
    std::vector<std::vector<double>> axes;
    for (int i = 0; i < dimension_; ++i) {
      axes.push_back(interval_samples(d.lower[i], d.upper[i], scan.eta_samples));
    }
    std::vector<std::size_t> idx(static_cast<std::size_t>(dimension_), 0);
    while (true) {
      Mat a = Mat::Zero(dimension_, dimension_);
      for (int i = 0; i < dimension_; ++i) a(i, i) = axes[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]] * x / y[i];
      append_zeta_candidates(out, a, d.c1, d.c2, scan.zeta_samples);
      int k = dimension_ - 1;
      while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == axes[static_cast<std::size_t>(k)].size()) {
        idx[static_cast<std::size_t>(k)] = 0;
        --k;
      }
      if (k < 0) break;
    }
  }
  return out;
}

std::vector<Mat> UncertaintySetFamily::covariances(const Vec& y, const CandidateScan& scan) const {
  if (std::holds_alternative<FiniteList>(kind_)) {
    std::vector<Mat> out;
    for (auto& c : candidates(y, scan)) out.push_back(std::move(c.a));
    return out;
  }
  // theta does not enter: scan a single zeta per covariance block.
  CandidateScan one = scan;
  one.zeta_samples = 1;
  std::vector<Mat> out;
  for (auto& c : candidates(y, one)) out.push_back(std::move(c.a));
  return out;
}

bool UncertaintySetFamily::contains(const Vec& y, const Vec& theta, const Mat& a,
                                    double tol) const {
  if (y.size() != dimension_ || a.rows() != dimension_ || a.cols() != dimension_) return false;
  const double x = total(y);
  if (const auto* v = std::get_if<VolStabBand>(&kind_)) {
    if (!is_diagonal(a, tol)) return false;
    const double hi = (1.0 + v->delta) * (1.0 + v->delta);
    for (int i = 0; i < dimension_; ++i) {
      const double e2 = y[i] * a(i, i) / x;
      if (e2 < 1.0 - tol || e2 > hi + tol) return false;
      if (i > 0 && std::abs(e2 - y[0] * a(0, 0) / x) > tol * std::max(1.0, e2)) return false;
    }
    return zeta_matches(theta, a, v->c1, v->c2, tol);
  }
  if (const auto* d = std::get_if<DiagonalInterval>(&kind_)) {
    if (!is_diagonal(a, tol)) return false;
    for (int i = 0; i < dimension_; ++i) {
      const double b = y[i] * a(i, i) / x;
      if (b < d->lower[i] - tol || b > d->upper[i] + tol) return false;
    }
    return zeta_matches(theta, a, d->c1, d->c2, tol);
  }
  // Finite list: accept any generator (convex combinations are not searched).
  for (const auto& c : candidates(y, {})) {
    const double scale = std::max(1.0, c.a.cwiseAbs().maxCoeff());
    if ((c.a - a).cwiseAbs().maxCoeff() > tol * scale) continue;
    if (theta.size() != 0 && (c.theta - theta).cwiseAbs().maxCoeff() > tol * std::max(1.0, c.theta.cwiseAbs().maxCoeff())) {
      continue;
    }
    return true;
  }
  return false;
}

std::vector<Mat> covariance_set(const UncertaintySetFamily& family, const Vec& y,
                                const CandidateScan& scan) {
  if (scan.eta_samples < 1 || scan.zeta_samples < 1) {
    throw InvalidArgument("covariance_set", "empty scan");
  }
  auto out = family.covariances(y, scan);
  for (const auto& a : out) {
    if (!is_spd(a)) throw InvalidArgument("covariance_set", "family returned a matrix that is not SPD");
  }
  return out;
}

bool ConditionReport::all_pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

const ConditionEntry& ConditionReport::at(const std::string& name) const {
  for (const auto& e : entries)
    if (e.name == name) return e;
  throw InvalidArgument("ConditionReport", "no condition named " + name);
}

ConditionReport check_admissibility(const UncertaintySetFamily& family,
                                    const std::vector<Vec>& probe_points,
                                    const CandidateScan& scan) {
  if (probe_points.empty()) throw InvalidArgument("check_admissibility", "no probe points");
  const double C = family.growth_constant();
  ConditionEntry lin{"linear_growth", -std::numeric_limits<double>::infinity(), C, {}, true};
  ConditionEntry quad{"quadratic_growth", -std::numeric_limits<double>::infinity(), C, {}, true};
  ConditionEntry shear{"shear", -std::numeric_limits<double>::infinity(), C, {}, true};
  ConditionEntry ell{"strong_ellipticity", std::numeric_limits<double>::infinity(), 0.0, {}, true};

  for (const auto& y : probe_points) {
    if (y.size() != family.dimension()) throw InvalidArgument("check_admissibility", "probe dimension mismatch");
    require_positive(y, "check_admissibility");
    const double x = total(y);
    const double norm = y.norm();
    for (const auto& c : family.candidates(y, scan)) {
      const Mat& a = c.a;
      double m = 0.0;
      for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) m = std::max(m, y[i] * y[j] * std::abs(a(i, j)));
      const double r_lin = m / x / (1.0 + norm);
      if (r_lin > lin.worst) { lin.worst = r_lin; lin.witness = y; }

      const double r_quad = y.dot(a * y) / (x * x);
      if (r_quad > quad.worst) { quad.worst = r_quad; quad.witness = y; }

      const double tr = a.trace();
      const double th2 = c.theta.squaredNorm();
      const double r_shear = th2 / (1.0 + tr) + tr / (1.0 + th2);
      if (r_shear > shear.worst) { shear.worst = r_shear; shear.witness = y; }

      Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues().minCoeff();
      if (lmin < ell.worst) { ell.worst = lmin; ell.witness = y; }
    }
  }
  // NaN ratios (overflow near the origin) count as failures.
  lin.pass = lin.worst <= C;
  quad.pass = quad.worst <= C;
  shear.pass = shear.worst <= C;
  ell.pass = ell.worst > 0.0;
  return {{lin, quad, shear, ell}};
}

SufficiencyResult arbitrage_sufficiency(const UncertaintySetFamily& family,
                                        const std::vector<Vec>& probe_points,
                                        const CandidateScan& scan, double certify_threshold) {
  if (probe_points.empty()) throw InvalidArgument("arbitrage_sufficiency", "no probe points");
  SufficiencyResult r;
  r.weight_gap_inf = std::numeric_limits<double>::infinity();
  r.diversity_inf = std::numeric_limits<double>::infinity();
  const int n = family.dimension();
  for (const auto& y : probe_points) {
    if (y.size() != n) throw InvalidArgument("arbitrage_sufficiency", "probe dimension mismatch");
    require_positive(y, "arbitrage_sufficiency");
    const double x = total(y);
    double logprod = 0.0;
    for (int i = 0; i < n; ++i) logprod += std::log(y[i]);
    const double geo = std::exp(logprod / n) / x;
    for (const auto& a : family.covariances(y, scan)) {
      double first = 0.0;
      for (int i = 0; i < n; ++i) first += y[i] * a(i, i) / x;
      const double gap = first - y.dot(a * y) / (x * x);
      if (gap < r.weight_gap_inf) { r.weight_gap_inf = gap; r.weight_gap_witness = y; }

      const double div = geo * (a.trace() - a.sum() / n);
      if (div < r.diversity_inf) { r.diversity_inf = div; r.diversity_witness = y; }
    }
  }
  if (r.weight_gap_inf > certify_threshold) r.weight_gap_zeta = r.weight_gap_inf;
  if (r.diversity_inf > certify_threshold) r.diversity_zeta = r.diversity_inf;
  return r;
}

Vec market_weights(const Vec& z) {
  const Eigen::Index n = z.size();
  Vec mu(n);
  if (n == 0) return mu;
  const double x = total(z);
  double partial = 0.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    mu[i] = z[i] / x;
    partial += mu[i];
  }
  mu[n - 1] = std::max(0.0, 1.0 - partial);
  return mu;
}

} // namespace robarb
