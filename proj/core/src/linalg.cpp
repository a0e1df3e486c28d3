#include "robarb/linalg.hpp"

namespace robarb {

std::optional<Mat> cholesky_lower(const Mat& a) {
  if (a.rows() != a.cols() || a.rows() == 0 || !a.allFinite()) return std::nullopt;
  Eigen::LLT<Mat> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Mat l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i)
    if (!(l(i, i) > 0.0)) return std::nullopt;
  return l;
}

} // namespace robarb
