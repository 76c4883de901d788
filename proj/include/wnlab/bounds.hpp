#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wnlab/flow.hpp"

namespace wnlab {

/// 1 for L = 2, (L/2)^{L/(L−2)} for L > 2.
double c_L(int depth);

struct BetaStats {
  double beta1 = 0.0;
  double beta_min = 0.0;
};

/// Weights w = x̃(0)^{⊙2/L−1} used by the weighted ℓ1 objective.
Vec theorem_weights(const Vec& xtilde0, int depth);

/// β₁ = ‖x̃(0)‖_{w,1}, β_min = minₙ wₙx̃ₙ(0) with w = theorem_weights(x̃(0)).
BetaStats beta_stats(const Vec& xtilde0, int depth);

/// log(β₁/β_min)/log(Q/β₁) for L = 2, L(β₁^γ̄ − β_min^γ̄)/(2Q^γ̄ − Lβ₁^γ̄) for L > 2, γ̄ = 1 − 2/L.
/// Throws PreconditionError unless Q > c_L·β₁^{2/L}.
double epsilon_bound(double beta1, double beta_min, double Q, int depth);

/// ε(ρ^{−L}β₁, ρ^{−L}β_min) evaluated from log ρ so huge magnifications do not overflow.
double epsilon_bound_magnified(double beta1, double beta_min, double Q, int depth, double log_rho);

/// Q > c_L·(ρ^{−L}β₁)^{2/L}, evaluated in log space.
bool epsilon_precondition(double beta1, double Q, int depth, double log_rho = 0.0);

/// ρ = (r₀/‖A†b‖^{1/L})·exp((‖A†b‖^{2/L} − r₀²)/2η̃), from ‖A†b‖₂ directly.
double log_rho_from_norm(double r0, double eta_ratio, double pinv_b_norm, int depth);
double rho_from_norm(double r0, double eta_ratio, double pinv_b_norm, int depth);  // throws OverflowError

double log_rho(double r0, double eta_ratio, const ProblemInstance& inst, const Projectors& proj, int depth);
double rho(double r0, double eta_ratio, const ProblemInstance& inst, const Projectors& proj, int depth);

struct BoundReport {
  int depth = 2;
  double c_L = 1.0;
  double beta1 = 0.0;
  double beta_min = 0.0;
  double Q = 0.0;
  double log_rho = 0.0;
  std::optional<double> rho;  // absent when exp(log_rho) overflows
  double pinv_b_norm = 0.0;   // ‖A†b‖₂
  double r_inf = 0.0;         // final r (WN) or ‖x‖₂
  bool inside_hypotheses = true;  // r₀ ≤ min(√η̃, ‖A†b‖^{1/L}) for the constant-rate variant
  bool precondition_ok = false;
  std::optional<double> epsilon;
  double weighted_l1 = 0.0;   // ‖x̃_∞‖_{w,1}
  double achieved_gap = 0.0;  // ‖x̃_∞‖_{w,1} − Q
  std::optional<bool> bound_satisfied;
  std::string note;
};

/// Compares the achieved gap against ε·Q. `Q` must be the weighted optimum for
/// w = theorem_weights(x̃(0)). Magnification ρ applies to WnConstant only.
/// Throws NotApplicableError unless the trajectory ended with LossTol.
BoundReport theorem_gap_check(const TrajectoryRecord& traj, double Q, const ProblemInstance& inst,
                              const Projectors& proj, double slack = 1e-8);

struct RateCertificate {
  std::vector<Eigen::Index> support;
  double sigma_min = 0.0;  // M-th singular value of A restricted to the support (0 if |I| < M)
  double c_x = 0.0;
  double c_r = 0.0;
  double c_u = 1.0;
  double predicted_rate = 0.0;
  std::size_t window_begin = 0;  // snapshot indices, inclusive
  std::size_t window_end = 0;
  double t0 = 0.0;
};

/// Builds the certificate from snapshots [window_begin, window_end] (defaults: all).
/// c_x is the smallest |xₙ|, n ∈ I, seen in the window.
RateCertificate rate_certificate(const TrajectoryRecord& traj, const ProblemInstance& inst,
                                 const std::vector<Eigen::Index>& support,
                                 std::size_t window_begin = 0,
                                 std::optional<std::size_t> window_end = std::nullopt);

/// L(t) ≤ L(t₀)·exp(−rate·(t − t₀)) at every snapshot in the window, up to a
/// relative slack of 1e-9.
bool rate_check(const TrajectoryRecord& traj, const RateCertificate& cert);

struct LogLossFit {
  double slope = 0.0;      // d log L / dt
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of log L against t. Nonpositive losses are skipped.
LogLossFit fit_log_loss(const std::vector<double>& t, const std::vector<double>& loss);

/// Post-transient window: from the first iteration with L ≤ drop·L(0) to the end.
LogLossFit fit_log_loss_post_transient(const TrajectoryRecord& traj, double drop = 1e-3);

/// p = 2^{−(N−1)}·Σ_{i<K} C(N−1, i). Exact integer sums for N ≤ 64, log space beyond.
double kernel_orthant_probability(long N, long K);

}  // namespace wnlab
