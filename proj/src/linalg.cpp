#include "wnlab/linalg.hpp"

#include <cmath>

#include "wnlab/errors.hpp"

namespace wnlab {

Vec hadamard_pow(const Vec& x, int p) {
  switch (p) {
    case 0:
      return Vec::Ones(x.size());
    case 1:
      return x;
    case 2:
      return x.array().square().matrix();
    case 3:
      return x.array().cube().matrix();
    default:
      break;
  }
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = std::pow(x[i], p);
  return out;
}

Vec hadamard_rpow(const Vec& x, double p) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = std::pow(x[i], p);
  return out;
}

bool all_finite(const Vec& v) { return v.allFinite(); }

bool all_positive(const Vec& v) { return v.size() == 0 || v.minCoeff() > 0.0; }

void require_size(const Vec& v, Eigen::Index expected, const std::string& what) {
  if (v.size() != expected) {
    throw ConfigError(what + ": expected " + std::to_string(expected) + " entries, got " +
                      std::to_string(v.size()));
  }
}

}  // namespace wnlab
