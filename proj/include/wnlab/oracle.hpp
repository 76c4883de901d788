#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wnlab/model.hpp"

namespace wnlab {

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string to_string(LpStatus s);

struct OracleSolution {
  Vec z;
  double objective = 0.0;
  LpStatus status = LpStatus::Infeasible;
  long iterations = 0;                 // simplex pivots over both phases
  std::vector<Eigen::Index> basis;     // column indices of the final basis
  double min_reduced_cost = 0.0;       // optimality certificate, ≥ −1e-9 at an optimum
  Vec dual;                            // y with Bᵀy = c_B (rows dropped as redundant are 0)
};

struct SimplexOptions {
  double feas_tol = 1e-9;  // on row-scaled data
  double pivot_tol = 1e-9;
  long max_pivots = 0;     // 0: 50·(rows + cols) + 1000
};

/// min cᵀz s.t. Az = b, z ≥ 0. Two-phase dense tableau simplex with Bland's rule.
/// Infeasible and Unbounded are results, not exceptions; SolverFailure is thrown
/// when the pivot guard trips or the final basis does not reproduce a feasible point.
OracleSolution solve_standard_lp(const Mat& A, const Vec& b, const Vec& c,
                                 const SimplexOptions& opts = {});

/// Q = min ⟨w, z⟩ over S₊ = {z ≥ 0 : Az = b}. w defaults to inst.weights().
OracleSolution min_weighted_l1_nonneg(const ProblemInstance& inst,
                                      const std::optional<Vec>& w = std::nullopt,
                                      const SimplexOptions& opts = {});

/// min ‖z‖₁ s.t. Az = b through the split z = z⁺ − z⁻.
OracleSolution min_l1_signed(const ProblemInstance& inst, const SimplexOptions& opts = {});

struct KernelWitness {
  bool exists = false;
  double t = 0.0;  // optimal margin: v ≥ t·1
  Vec v;
};

/// max t s.t. Av = 0, v ≥ t·1, v ≤ 1, solved as an LP in (s, t, σ) ≥ 0 with v = s + t·1.
KernelWitness positive_kernel_lp(const Mat& A, double margin_tol = 1e-9);

/// v > 0 with Av = 0 when one exists.
std::optional<Vec> positive_kernel_witness(const ProblemInstance& inst, double margin_tol = 1e-9);

}  // namespace wnlab
