#pragma once

#include <Eigen/Core>
#include <Eigen/Cholesky>

#include <optional>

namespace robarb {

// Monte Carlo and rule evaluation work with small asset counts; fixed
// maximum sizes keep Eigen off the heap inside path loops.
inline constexpr int kMaxAssets = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAssets, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAssets, kMaxAssets>;

// Lower-triangular Cholesky factor, or nullopt if `a` is not SPD.
std::optional<Mat> cholesky_lower(const Mat& a);

inline bool is_symmetric(const Mat& a, double tol = 1e-12) {
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + a.cwiseAbs().maxCoeff());
}

inline bool is_spd(const Mat& a) { return is_symmetric(a) && cholesky_lower(a).has_value(); }

inline bool all_positive(const Vec& z) { return (z.array() > 0.0).all(); }

inline bool all_finite(const Vec& z) { return z.allFinite(); }

} // namespace robarb
