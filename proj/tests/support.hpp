#pragma once

#include <cmath>
#include <functional>

#include "wnlab/model.hpp"
#include "wnlab/rng.hpp"

namespace wnlab::fixtures {

// M×N instance with entries of A and the planted positive x in [lo, hi]; b = A x^{⊙L}.
inline ProblemInstance random_instance(Rng& rng, Eigen::Index M, Eigen::Index N, int depth = 2,
                                       double lo = 0.5, double hi = 2.0) {
  ProblemInstance inst;
  inst.A = Mat(M, N);
  for (Eigen::Index i = 0; i < M; ++i)
    for (Eigen::Index j = 0; j < N; ++j) inst.A(i, j) = rng.uniform(-1.0, 1.0);
  const Vec x = rng.uniform_vec(N, lo, hi);
  inst.b = inst.A * hadamard_pow(x, depth);
  inst.x_star = hadamard_pow(x, depth);
  return inst;
}

// Gaussian A with b = A z for a positive z: a consistent system with S₊ nonempty.
inline ProblemInstance gaussian_instance(Rng& rng, Eigen::Index M, Eigen::Index N) {
  ProblemInstance inst;
  inst.A = rng.normal_mat(M, N) / std::sqrt(static_cast<double>(M));
  inst.x_star = rng.uniform_vec(N, 0.0, 1.0);
  inst.b = inst.A * *inst.x_star;
  return inst;
}

inline Vec central_diff(const std::function<double(const Vec&)>& f, const Vec& x, double step = 1e-5) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec p = x, m = x;
    p[i] += step;
    m[i] -= step;
    g[i] = (f(p) - f(m)) / (2.0 * step);
  }
  return g;
}

inline double rel_err(const Vec& a, const Vec& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

}  // namespace wnlab::fixtures
