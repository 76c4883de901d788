#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "wnlab/linalg.hpp"

namespace wnlab::fixtures {

// Minimum of objective(z) over basic solutions: every column subset S with
// |S| ≤ rank(A) and A_S of full column rank, z_S = A_S⁺b when A_S z_S = b.
// `nonneg` additionally requires z ≥ 0. Returns nullopt when no subset is feasible.
template <class Objective>
std::optional<double> enumerate_supports(const Mat& A, const Vec& b, bool nonneg, Objective objective,
                                         Vec* argmin = nullptr) {
  const Eigen::Index m = A.rows(), n = A.cols();
  const double scale = 1.0 + b.cwiseAbs().maxCoeff();
  std::optional<double> best;
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j)
      if (mask & (1ul << j)) cols.push_back(j);
    if (static_cast<Eigen::Index>(cols.size()) > m) continue;
    Vec z = Vec::Zero(n);
    if (!cols.empty()) {
      Mat AS(m, static_cast<Eigen::Index>(cols.size()));
      for (std::size_t k = 0; k < cols.size(); ++k) AS.col(static_cast<Eigen::Index>(k)) = A.col(cols[k]);
      Eigen::ColPivHouseholderQR<Mat> qr(AS);
      if (qr.rank() < AS.cols()) continue;
      const Vec zs = qr.solve(b);
      for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = zs[static_cast<Eigen::Index>(k)];
    }
    if ((A * z - b).cwiseAbs().maxCoeff() > 1e-9 * scale) continue;
    if (nonneg && z.minCoeff() < -1e-12) continue;
    const double v = objective(z);
    if (!best || v < *best) {
      best = v;
      if (argmin) *argmin = z;
    }
  }
  return best;
}

}  // namespace wnlab::fixtures
