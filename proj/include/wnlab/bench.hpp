#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wnlab/bounds.hpp"
#include "wnlab/flow.hpp"

namespace wnlab {

enum class GroundTruth { GaussianAbs, SparseAbs, SparseSigned };

std::string to_string(GroundTruth g);
GroundTruth parse_ground_truth(const std::string& s);

struct SweepPoint {
  double r0 = 1.0;
  double eta_ratio = 0.1;
  Variant variant = Variant::WnConstant;
};

struct ExperimentSpec {
  std::string name = "campaign";
  long N = 200;
  long M = 50;
  GroundTruth ground_truth = GroundTruth::GaussianAbs;
  long sparsity = 10;
  std::vector<SweepPoint> sweep;
  long trials = 3;
  FlowConfig flow;  // template: depth, step, max_iters, loss_tol, ...
  std::uint64_t seed = 0;
  bool theorem_check = false;     // attach a BoundReport to converged trials
  long curve_points = 0;          // >0: keep a downsampled loss curve per trial

  /// Throws ConfigError on invalid values. SparseSigned forces every sweep
  /// point to the Signed variant.
  void validate();
};

/// "default", "fixed:<h>" or "linesearch[:shrink[:armijo_c]]".
StepPolicy parse_step_policy(const std::string& s);
std::string to_string(const StepPolicy& p);

/// Overrides FlowConfig fields from a "flow" JSON object. Unknown keys are rejected.
void apply_flow_json(FlowConfig& f, const nlohmann::json& j);

/// JSON <-> spec. Unknown keys are rejected.
ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const ExperimentSpec& spec);

/// A = G/√M with standard normal G; x* per ground truth; b = A x*.
ProblemInstance gen_instance(long N, long M, GroundTruth gt, long sparsity, std::uint64_t seed);

struct TrialResult {
  std::size_t point = 0;
  long trial = 0;
  double r0 = 0.0;
  double eta_ratio = 0.0;
  Variant variant = Variant::Plain;
  std::optional<double> eps1;  // ‖x̃_∞‖₁ − Q
  std::optional<double> eps2;  // ‖x̃_∞ − x*‖₁
  double Q = 0.0;              // unit-weight optimum (signed LP for SparseSigned)
  double l1_xtilde = 0.0;
  double final_loss = 0.0;
  long iters = 0;
  double t = 0.0;
  TerminalReason reason = TerminalReason::MaxIters;
  long positivity_violations = 0;
  double step_h = 0.0;
  std::optional<BoundReport> bound;
  std::vector<std::pair<long, double>> loss_curve;  // (iter, loss)
  std::string error;  // non-empty when the trial failed
};

struct CampaignOptions {
  unsigned threads = 0;  // 0: WNLAB_THREADS, else hardware concurrency
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(const TrialResult&)> on_result;  // called under a lock
};

/// Worker count from WNLAB_THREADS (if set and positive) capped by `requested`/hardware.
unsigned worker_count(unsigned requested, std::size_t tasks);

/// Runs every (sweep point, trial) pair. Trial k uses instance and initialization
/// streams derived from (seed, k), shared across sweep points. Results are
/// ordered by (point, trial); cancelled trials are omitted.
std::vector<TrialResult> run_campaign(const ExperimentSpec& spec, const CampaignOptions& opts = {});

struct Stat {
  double mean = 0.0, min = 0.0, max = 0.0;
  long count = 0;
};

struct SummaryRow {
  std::size_t point = 0;
  double r0 = 0.0;
  double eta_ratio = 0.0;
  Variant variant = Variant::Plain;
  long trials_ok = 0;
  long trials_failed = 0;
  long converged = 0;
  Stat eps1, eps2, iters, final_loss;
};

/// Per sweep point statistics over trials without an error.
std::vector<SummaryRow> aggregate(const std::vector<TrialResult>& results);

void write_results_csv(std::ostream& out, const std::vector<TrialResult>& results);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

enum class Scale { Desk, Paper };
Scale parse_scale(const std::string& s);

/// Campaign behind each reproducible figure: fig2, fig3, fig4, fig5.
ExperimentSpec figure_spec(const std::string& figure_id, Scale scale);

/// Rough cost in multiply-adds of a campaign, for budget checks.
double campaign_cost(const ExperimentSpec& spec);

}  // namespace wnlab
