#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wnlab/model.hpp"

namespace wnlab {

enum class Variant { Plain, WnConstant, WnDynamic, Signed };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);  // throws ConfigError

/// Euler step of fixed size. h <= 0 selects the default step (see default_step).
struct FixedStep {
  double h = 0.0;
};

/// Backtracking from `initial_step`, shrinking by `shrink` until the Armijo
/// condition holds.
struct LineSearch {
  double shrink = 0.5;
  double armijo_c = 1e-4;
  double initial_step = 1.0;
};

using StepPolicy = std::variant<FixedStep, LineSearch>;

struct InitSpec {
  enum class Mode { ExplicitVector, PolarExplicit, RandomPositive };

  Mode mode = Mode::RandomPositive;
  Vec x0;               // ExplicitVector; for Signed, the 2N vector (u₊ then u₋)
  double r0 = 1.0;      // PolarExplicit, RandomPositive
  Vec u0;               // PolarExplicit
  std::uint64_t seed = 0;  // RandomPositive

  static InitSpec explicit_vector(Vec x0);
  static InitSpec polar(double r0, Vec u0);
  static InitSpec random_positive(double r0, std::uint64_t seed);
};

enum class PositivityPolicy { SignalAndContinue, Halt };

/// How WnDynamic is discretized. Reduced: x' = x − h‖x‖²∇L(x).
/// Polar: Euler on (r, u) with (η_r, η_u) = (r², 1).
enum class DynamicPath { Reduced, Polar };

struct FlowConfig {
  int depth = 2;
  Variant variant = Variant::Plain;
  double eta_ratio = 0.1;  // η̃, WnConstant only
  StepPolicy step = FixedStep{};
  long max_iters = 200000;
  double loss_tol = 1e-12;
  long snapshot_stride = 100;
  std::uint64_t seed = 0;
  InitSpec init;

  bool renormalize = true;
  PositivityPolicy positivity = PositivityPolicy::SignalAndContinue;
  bool nonnegative = true;
  DynamicPath dynamic_path = DynamicPath::Reduced;
  // η_u; only the rescaling test changes it.
  double direction_rate = 1.0;
  // Per-iteration loss and time histories.
  bool record_history = true;
  // Polled every 1024 iterations; a set flag ends the run early with `cancelled`.
  const std::atomic<bool>* cancel = nullptr;

  void validate() const;
};

using FlowState = std::variant<DenseState, PolarState, SignedState>;

/// Effective x (Plain: x; WN: (r/‖u‖)u). Signed states have no single x and throw.
Vec effective_x(const FlowState& s);
/// x^{⊙L}, or u₊^{⊙L} − u₋^{⊙L} for Signed.
Vec effective_xtilde(const FlowState& s, int depth);

struct Snapshot {
  long iter = 0;
  double t = 0.0;
  double loss = 0.0;
  FlowState state;
};

enum class TerminalReason { LossTol, MaxIters, Diverged, Stalled, PositivityViolation };

std::string to_string(TerminalReason r);
TerminalReason parse_terminal_reason(const std::string& s);

struct Terminal {
  TerminalReason reason = TerminalReason::MaxIters;
  long iters = 0;
  double final_loss = 0.0;
  double t = 0.0;
  Vec final_effective_x;  // empty for Signed
  Vec final_xtilde;
};

struct TrajectoryRecord {
  Variant variant = Variant::Plain;
  int depth = 2;
  double eta_ratio = 0.0;
  double step_h = 0.0;  // resolved fixed step, 0 under line search
  std::vector<Snapshot> snapshots;
  std::vector<double> loss_history;  // index = iteration
  std::vector<double> time_history;
  long positivity_violations = 0;
  long first_violation_iter = -1;
  bool cancelled = false;
  Terminal terminal;

  const Snapshot& initial() const { return snapshots.front(); }
  const Snapshot& final() const { return snapshots.back(); }
};

/// x' = x − h∇L(x).
Vec step_plain(const Vec& x, const ProblemInstance& inst, int depth, double h);

/// r' = r − hη̃∂_rL̃, u' = u − hη_u∂_uL̃, then u' ← u'/‖u'‖ when renormalizing.
PolarState step_wn_constant(const PolarState& s, const ProblemInstance& inst, int depth,
                            double eta_ratio, double h, bool renormalize = true,
                            double direction_rate = 1.0);

/// One Euler step of flow time h for (η_r, η_u) = (r², 1).
PolarState step_wn_dynamic(const PolarState& s, const ProblemInstance& inst, int depth,
                           double h, DynamicPath path = DynamicPath::Reduced,
                           bool renormalize = true);

/// Euler on both blocks of the signed loss.
SignedState step_signed(const SignedState& s, const ProblemInstance& inst, int depth, double h);

struct LineSearchResult {
  FlowState state;
  double h_used = 0.0;
  double dt = 0.0;  // flow time advanced
  double loss_before = 0.0;
  double loss_after = 0.0;
  bool stalled = false;
};

/// Backtracking Armijo step: accepts the largest h = initial·shrinkᵏ with
/// loss(s') ≤ loss(s) − c·h·⟨g, Dg⟩ where D is the variant's rate metric.
/// A zero gradient or no acceptable h above 1e-18 sets `stalled`.
LineSearchResult line_search_step(const FlowState& state, const ProblemInstance& inst,
                                  const FlowConfig& config, const LineSearch& ls);

/// 0.01·min(1, 1/‖A‖²)·2^{−(L−2)}, divided by max(1, η̃, r₀²) where r₀ is the
/// norm of the initial parameter.
double default_step(const ProblemInstance& inst, const FlowConfig& config, double r0);

/// Builds the initial state for config.variant.
FlowState initial_state(const FlowConfig& config, Eigen::Index n);

TrajectoryRecord integrate(const FlowConfig& config, const ProblemInstance& inst);

}  // namespace wnlab
