#pragma once

#include <cstdint>
#include <random>

#include "wnlab/linalg.hpp"

namespace wnlab {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of stream `stream` under master seed `seed`. Distinct (seed, stream)
/// pairs give unrelated engines, so trials can run in any order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// mt19937_64 with portable uniform and normal transforms. The standard
/// library distributions are implementation-defined, so they are not used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Box–Muller transform.
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Vec normal_vec(Eigen::Index n);
  Vec uniform_vec(Eigen::Index n, double lo, double hi);
  Mat normal_mat(Eigen::Index rows, Eigen::Index cols);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wnlab
