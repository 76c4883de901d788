#pragma once

#include <Eigen/Dense>

#include <string>

namespace wnlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Entrywise integer power x^{⊙p}; p = 0 yields the all-ones vector and
/// negative p is allowed for strictly nonzero entries.
Vec hadamard_pow(const Vec& x, int p);

/// Entrywise real power for x ≥ 0 (used by the Bregman potential with exponent 2/L).
Vec hadamard_rpow(const Vec& x, double p);

bool all_finite(const Vec& v);
bool all_positive(const Vec& v);

/// Throws ConfigError unless `v` has `expected` entries.
void require_size(const Vec& v, Eigen::Index expected, const std::string& what);

}  // namespace wnlab
