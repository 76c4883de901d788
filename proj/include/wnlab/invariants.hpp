#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wnlab/flow.hpp"

namespace wnlab {

/// value = mantissa · exp(log_scale); keeps exponential factors out of overflow.
struct ScaledVector {
  Vec mantissa;
  double log_scale = 0.0;

  Vec value() const;  // throws OverflowError if exp(log_scale) leaves the double range
};

/// (I − P_A)·log x for L = 2, (I − P_A)·x^{⊙2−L} otherwise. Requires x > 0.
Vec h0(const Vec& x, const Projectors& proj, int depth);

/// (I − P_A)(log u + r²/2η̃) for L = 2, (I − P_A)·u^{⊙2−L}·exp((2−L)r²/2η̃) otherwise.
/// u is used as u/‖u‖. Throws OverflowError when |(2−L)r²/2η̃| > 700.
Vec h_eta(const PolarState& s, const Projectors& proj, int depth, double eta_ratio);
ScaledVector h_eta_scaled(const PolarState& s, const Projectors& proj, int depth, double eta_ratio);

/// γ(r₀, r) = (r/r₀)·exp((r₀² − r²)/2η̃).
double gamma(double r0, double r, double eta_ratio);
double log_gamma(double r0, double r, double eta_ratio);

/// Per snapshot: ‖(I − P_A)[log x(t) − log(γ·x(0))]‖_∞ for L = 2 and
/// ‖(I − P_A)[x(t)^{⊙2−L} − (γ·x(0))^{⊙2−L}]‖_∞ otherwise, with γ = γ(r₀, r(t)).
std::vector<double> invariant_comparison_residual(const TrajectoryRecord& traj,
                                                  const Projectors& proj, int depth,
                                                  double eta_ratio);

/// F(x̃) = ½Σ(x̃ log x̃ − x̃) for L = 2, (L/(2(2−L)))Σx̃^{2/L} for L > 2.
double bregman_F(const Vec& xtilde, int depth);
Vec bregman_grad(const Vec& xtilde, int depth);
/// D_F(z, x̃) = F(z) − F(x̃) − ⟨∇F(x̃), z − x̃⟩; z ≥ 0 with 0·log 0 = 0, x̃ > 0.
double bregman_div(const Vec& z, const Vec& xtilde, int depth);

struct InvariantSnapshot {
  long iter = 0;
  double t = 0.0;
  std::optional<Vec> h0;
  std::optional<Vec> h_eta;
  std::optional<double> gamma;
  double u_norm = 0.0;
  double min_entry = 0.0;
  std::map<std::string, double> bregman;
};

struct DriftReport {
  std::string quantity;
  bool applicable = true;
  std::string note;
  double max_abs_drift = 0.0;   // ℓ∞ against t = 0
  double max_step_drift = 0.0;  // ℓ∞ between consecutive snapshots
  long violations = 0;          // monotonicity checks only
  double max_violation = 0.0;
  double halving_ratio = 0.0;   // filled by step-halving studies, 0 otherwise
};

struct ReferencePoint {
  std::string id;
  Vec z;
};

struct DriftOptions {
  double eta_ratio = 0.1;
  std::vector<ReferencePoint> references;  // Bregman monotonicity targets
  double monotonicity_tol = 1e-10;
};

InvariantSnapshot invariant_snapshot(const Snapshot& snap, const TrajectoryRecord& traj,
                                     const Projectors& proj, const DriftOptions& opts);

/// One report per invariant that applies to the trajectory's variant.
std::vector<DriftReport> drift_report(const TrajectoryRecord& traj, const Projectors& proj,
                                      const DriftOptions& opts);

/// Conserved quantity tracked for a variant: "h0" (Plain, WnDynamic) or "h_eta" (WnConstant).
std::string conserved_quantity(Variant v);

struct HalvingStudy {
  std::string quantity;
  double h = 0.0;
  long steps = 0;
  double drift_h = 0.0;        // max accumulated drift at step h
  double drift_half = 0.0;     // same at h/2
  double step_drift_h = 0.0;   // max one-step drift at h
  double step_drift_half = 0.0;
  double accumulated_ratio() const { return drift_h / drift_half; }
  double step_ratio() const { return step_drift_h / step_drift_half; }
};

/// Runs `config` for `steps` fixed steps at h and at h/2 (snapshot every step,
/// no early stop) and measures the drift of the variant's conserved quantity.
HalvingStudy step_halving_study(FlowConfig config, const ProblemInstance& inst,
                                const Projectors& proj, double h, long steps);

}  // namespace wnlab
