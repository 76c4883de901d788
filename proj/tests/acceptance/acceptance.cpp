// Acceptance gate: one PASS/FAIL line per criterion.
//
// Exit status is 0 when every criterion passes or fails exactly as listed in
// --known-failures; an unlisted failure, or a listed criterion that passes, is
// reported and gives exit status 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../brute_force.hpp"
#include "../support.hpp"
#include "wnlab/bench.hpp"
#include "wnlab/bounds.hpp"
#include "wnlab/invariants.hpp"
#include "wnlab/oracle.hpp"

using namespace wnlab;
using fixtures::central_diff;
using fixtures::random_instance;
using fixtures::rel_err;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Campaign results shared by criteria 3, 8, 9 and 10.
struct Campaigns {
  std::map<std::string, std::vector<TrialResult>> results;
  std::map<std::string, double> seconds;

  const std::vector<TrialResult>& get(const std::string& fig) {
    auto it = results.find(fig);
    if (it != results.end()) return it->second;
    const auto t0 = std::chrono::steady_clock::now();
    auto r = run_campaign(figure_spec(fig, Scale::Desk));
    seconds[fig] = seconds_since(t0);
    return results.emplace(fig, std::move(r)).first->second;
  }
};

const SummaryRow* find_row(const std::vector<SummaryRow>& rows, Variant v, double r0, double eta = -1.0) {
  for (const auto& row : rows) {
    if (row.variant != v || std::abs(row.r0 - r0) > 1e-12) continue;
    if (eta >= 0.0 && std::abs(row.eta_ratio - eta) > 1e-12) continue;
    return &row;
  }
  return nullptr;
}

// ---- 1 ----
Outcome gradients() {
  Rng rng(101);
  double worst = 0.0;
  long checks = 0;
  for (int trial = 0; trial < 50; ++trial) {
    for (int depth = 1; depth <= 4; ++depth) {
      const auto inst = random_instance(rng, 5, 8, depth);
      const Vec x = rng.uniform_vec(8, 0.5, 2.0);
      worst = std::max(worst, rel_err(grad_loss(x, inst, depth),
                                       central_diff([&](const Vec& y) { return loss(y, inst, depth); }, x)));

      const PolarState s{rng.uniform(0.5, 2.0), rng.uniform_vec(8, 0.5, 2.0)};
      const WnGrads g = wn_grads(s, inst, depth);
      const double h = 1e-5;
      const double fd_r = (wn_loss({s.r + h, s.u}, inst, depth) - wn_loss({s.r - h, s.u}, inst, depth)) / (2 * h);
      worst = std::max(worst, rel_err(g.dr, fd_r));
      worst = std::max(worst, rel_err(g.du, central_diff([&](const Vec& u) { return wn_loss({s.r, u}, inst, depth); },
                                                         s.u)));

      const Vec up = rng.uniform_vec(8, 0.5, 1.5), um = rng.uniform_vec(8, 0.5, 1.5);
      const SignedLossGrads sg = signed_loss_and_grads({up, um}, inst, depth);
      worst = std::max(worst, rel_err(sg.d_plus, central_diff([&](const Vec& y) {
                                        return signed_loss_and_grads({y, um}, inst, depth).loss;
                                      }, up)));
      worst = std::max(worst, rel_err(sg.d_minus, central_diff([&](const Vec& y) {
                                         return signed_loss_and_grads({up, y}, inst, depth).loss;
                                       }, um)));
      checks += 5;
    }
  }
  return {worst <= 1e-6, std::to_string(checks) + " gradient blocks, max relative error " + num(worst)};
}

// ---- 2 ----
Outcome conservation() {
  Rng rng(202);
  double worst_drift = 0.0, worst_ratio_dev = 0.0;
  std::vector<std::string> ratios;
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(rng, 5, 8);
    const Projectors p = projectors(inst);
    const Vec x0 = rng.uniform_vec(8, 0.5, 2.0);
    for (Variant v : {Variant::Plain, Variant::WnConstant}) {
      FlowConfig c;
      c.variant = v;
      c.eta_ratio = 0.5;
      c.init = InitSpec::explicit_vector(x0);
      const HalvingStudy st = step_halving_study(c, inst, p, 1e-3, 10000);
      worst_drift = std::max(worst_drift, st.drift_h);
      const double ratio = st.accumulated_ratio();
      worst_ratio_dev = std::max(worst_ratio_dev, std::abs(ratio - 4.0) / 4.0);
      if (trial == 0) ratios.push_back(st.quantity + " ratio " + num(ratio));
    }
  }
  std::string detail = "max drift " + num(worst_drift) + " (limit 1e-4), max |ratio/4 - 1| " + num(worst_ratio_dev);
  for (const auto& r : ratios) detail += "; " + r;
  return {worst_drift <= 1e-4 && worst_ratio_dev <= 0.3, detail};
}

// ---- 3 ----
Outcome norm_and_monotonicity(Campaigns& camp) {
  Rng rng(303);
  double worst_norm = 0.0;
  long loss_increases = 0, line_search_runs = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = random_instance(rng, 5, 8);
    for (Variant v : {Variant::WnConstant, Variant::WnDynamic}) {
      for (DynamicPath path : {DynamicPath::Reduced, DynamicPath::Polar}) {
        if (v == Variant::WnConstant && path == DynamicPath::Polar) continue;
        FlowConfig c;
        c.variant = v;
        c.dynamic_path = path;
        c.eta_ratio = 0.3;
        c.step = FixedStep{1e-3};
        c.max_iters = 2000;
        c.snapshot_stride = 1;
        c.init = InitSpec::random_positive(rng.uniform(0.3, 2.0), static_cast<std::uint64_t>(trial));
        for (const Snapshot& s : integrate(c, inst).snapshots) {
          worst_norm = std::max(worst_norm, std::abs(std::get<PolarState>(s.state).u.norm() - 1.0));
        }
      }
    }
    for (Variant v : {Variant::Plain, Variant::WnConstant, Variant::WnDynamic, Variant::Signed}) {
      FlowConfig c;
      c.variant = v;
      c.eta_ratio = 0.3;
      c.step = LineSearch{};
      c.max_iters = 3000;
      c.init = InitSpec::random_positive(1.0, static_cast<std::uint64_t>(100 + trial));
      const TrajectoryRecord traj = integrate(c, inst);
      for (std::size_t k = 1; k < traj.loss_history.size(); ++k) {
        if (traj.loss_history[k] > traj.loss_history[k - 1]) ++loss_increases;
      }
      ++line_search_runs;
    }
  }
  long positivity = 0, trials = 0;
  for (const char* fig : {"fig2", "fig3", "fig4"}) {
    for (const auto& r : camp.get(fig)) {
      positivity += r.positivity_violations;
      ++trials;
    }
  }
  // One ulp of 1.0 is 2.2e-16; renormalized vectors sit within a few ulps.
  const bool pass = worst_norm <= 4.0 * 2.220446049250313e-16 && loss_increases == 0 && positivity == 0;
  return {pass, "max |‖u‖-1| " + num(worst_norm) + ", line-search loss increases " + std::to_string(loss_increases) +
                    " over " + std::to_string(line_search_runs) + " runs, positivity violations " +
                    std::to_string(positivity) + " over " + std::to_string(trials) + " desk campaign trials"};
}

// ---- 4 ----
Outcome comparison_identity() {
  Rng rng(404);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_instance(rng, 5, 8);
    FlowConfig c;
    c.variant = Variant::WnConstant;
    c.eta_ratio = 0.5;
    c.step = FixedStep{1e-3};
    c.max_iters = 10000;
    c.loss_tol = 1e-300;
    c.snapshot_stride = 100;
    c.init = InitSpec::explicit_vector(rng.uniform_vec(8, 0.5, 2.0));
    const TrajectoryRecord traj = integrate(c, inst);
    for (double r : invariant_comparison_residual(traj, projectors(inst), 2, c.eta_ratio)) worst = std::max(worst, r);
  }
  return {worst <= 1e-6, "max residual " + num(worst) + " over 20 instances, 1e4 steps (limit 1e-6)"};
}

// ---- 5 ----
Outcome lp_oracle() {
  Rng rng(505);
  long mismatches = 0, infeasible = 0, flagged_wrong = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index n = m + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(9 - m)));
    ProblemInstance inst;
    inst.A = rng.normal_mat(m, n);
    inst.b = trial % 4 == 0 ? rng.normal_vec(m) : Vec(inst.A * rng.uniform_vec(n, 0.0, 1.0));
    const Vec w = trial % 2 == 0 ? Vec::Ones(n) : rng.uniform_vec(n, 0.5, 2.0);
    const OracleSolution s = min_weighted_l1_nonneg(inst, w);
    const auto brute = fixtures::enumerate_supports(inst.A, inst.b, true, [&](const Vec& z) { return w.dot(z); });
    if (!brute) {
      ++infeasible;
      if (s.status != LpStatus::Infeasible) ++flagged_wrong;
      continue;
    }
    if (s.status != LpStatus::Optimal) {
      ++flagged_wrong;
      continue;
    }
    const double rel = std::abs(s.objective - *brute) / std::max(1.0, std::abs(*brute));
    worst = std::max(worst, rel);
    if (rel > 1e-9) ++mismatches;
  }
  return {mismatches == 0 && flagged_wrong == 0,
          "200 instances, " + std::to_string(infeasible) + " infeasible, status errors " +
              std::to_string(flagged_wrong) + ", max relative objective error " + num(worst)};
}

// ---- 6 ----
Outcome dynamic_coincidence() {
  double worst = 0.0;
  long converged = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const ProblemInstance inst = gen_instance(200, 50, GroundTruth::GaussianAbs, 0, derive_seed(606, trial));
    Vec xt[2];
    int k = 0;
    for (Variant v : {Variant::Plain, Variant::WnDynamic}) {
      FlowConfig c;
      c.variant = v;
      c.max_iters = 1000000;
      c.loss_tol = 1e-12;
      c.snapshot_stride = c.max_iters + 1;
      c.record_history = false;
      c.init = InitSpec::random_positive(1.0, derive_seed(607, trial));
      const TrajectoryRecord traj = integrate(c, inst);
      if (traj.terminal.reason == TerminalReason::LossTol) ++converged;
      xt[k++] = traj.terminal.final_xtilde;
    }
    worst = std::max(worst, (xt[0] - xt[1]).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-6 && converged == 20, "10 instances 50x200, runs reaching loss 1e-12: " +
                                                std::to_string(converged) + "/20, max |x̃_dyn - x̃_plain| " + num(worst)};
}

// ---- 7 ----
Outcome bregman() {
  long violations = 0, steps = 0, refs = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ProblemInstance inst = gen_instance(30, 10, GroundTruth::GaussianAbs, 0, derive_seed(707, trial));
    DriftOptions opts;
    opts.references.push_back({"x_star", *inst.x_star});
    const OracleSolution unit = min_weighted_l1_nonneg(inst);
    if (unit.status == LpStatus::Optimal) opts.references.push_back({"lp_unit", unit.z});
    Rng rng(derive_seed(708, trial));
    while (opts.references.size() < 5) {
      const OracleSolution s = min_weighted_l1_nonneg(inst, rng.uniform_vec(inst.cols(), 0.5, 2.0));
      if (s.status == LpStatus::Optimal) {
        opts.references.push_back({"lp_w" + std::to_string(opts.references.size()), s.z});
      }
    }
    FlowConfig c;
    c.variant = Variant::WnDynamic;
    c.max_iters = 20000;
    c.snapshot_stride = 1;
    c.init = InitSpec::random_positive(1.0, derive_seed(709, trial));
    const TrajectoryRecord traj = integrate(c, inst);
    steps += static_cast<long>(traj.snapshots.size()) - 1;
    refs += static_cast<long>(opts.references.size());
    for (const auto& r : drift_report(traj, projectors(inst), opts)) {
      if (r.quantity != "bregman_monotonicity") continue;
      violations += r.violations;
      worst = std::max(worst, r.max_violation);
    }
  }
  return {violations == 0 && refs == 50, std::to_string(steps) + " steps, " + std::to_string(refs) +
                                             " reference points, violations " + std::to_string(violations) +
                                             " (largest increase " + num(worst) + ")"};
}

// ---- 8 ----
Outcome fig2_trend(Campaigns& camp) {
  const auto rows = aggregate(camp.get("fig2"));
  const SummaryRow* plain = find_row(rows, Variant::Plain, 1.0);
  const SummaryRow* wn = find_row(rows, Variant::WnConstant, 1.0);
  if (!plain || !wn) return {false, "missing r0 = 1 rows"};
  const double ep = plain->eps1.mean, ew = wn->eps1.mean;
  const bool pass = plain->eps1.count == 3 && wn->eps1.count == 3 && 10.0 * std::abs(ew) <= std::abs(ep);
  return {pass, "r0 = 1: plain eps1 " + num(ep) + ", WN eps1 " + num(ew) + ", ratio " + num(std::abs(ep / ew)) +
                    " (campaign " + num(camp.seconds["fig2"]) + " s)"};
}

// ---- 9 ----
Outcome fig3_trend(Campaigns& camp) {
  const auto rows = aggregate(camp.get("fig3"));
  std::vector<double> e, it;
  std::string detail;
  for (double eta : {1.0, 0.3, 0.1}) {
    const SummaryRow* r = find_row(rows, Variant::WnConstant, 1.0, eta);
    if (!r) return {false, "missing eta row"};
    e.push_back(r->eps1.mean);
    it.push_back(r->iters.mean);
    detail += "eta " + num(eta) + ": eps1 " + num(r->eps1.mean) + ", iters " + num(r->iters.mean) + "; ";
  }
  const bool pass = e[0] > e[1] && e[1] > e[2] && it[0] < it[1] && it[1] < it[2];
  return {pass, detail + "campaign " + num(camp.seconds["fig3"]) + " s"};
}

// ---- 10 ----
Outcome fig4_trend(Campaigns& camp) {
  const auto rows = aggregate(camp.get("fig4"));
  bool ordered = true;
  std::string detail;
  for (double r0 : {0.1, 0.3, 1.0, 3.0}) {
    const SummaryRow* p = find_row(rows, Variant::Plain, r0);
    const SummaryRow* w = find_row(rows, Variant::WnConstant, r0);
    if (!p || !w) return {false, "missing rows"};
    ordered = ordered && w->eps2.mean < p->eps2.mean;
    detail += "r0 " + num(r0) + ": eps2 WN " + num(w->eps2.mean) + " vs plain " + num(p->eps2.mean) + "; ";
  }
  const SummaryRow* w100 = find_row(rows, Variant::WnConstant, 100.0);
  const SummaryRow* p100 = find_row(rows, Variant::Plain, 100.0);
  if (!w100 || !p100) return {false, "missing r0 = 100 rows"};
  const bool stalled = w100->final_loss.mean > 1e-6;
  detail += "r0 100: WN final loss " + num(w100->final_loss.mean) + " (plain " + num(p100->final_loss.mean) + ")";
  return {ordered && stalled, detail};
}

// ---- 11 ----
Outcome theorem_bound() {
  Rng rng(1111);
  long instances = 0, converged = 0, satisfied = 0, good_fit = 0, attempts = 0;
  double min_r2 = 1.0;
  while (instances < 20 && attempts < 200) {
    ++attempts;
    const auto inst = fixtures::gaussian_instance(rng, 5, 20);
    if (!positive_kernel_witness(inst)) continue;
    ++instances;
    const Projectors p = projectors(inst);
    const double eta = 0.5;
    const double r0 = 0.5 * std::min(std::sqrt(eta), std::sqrt((p.A_pinv * inst.b).norm()));
    FlowConfig c;
    c.variant = Variant::WnConstant;
    c.eta_ratio = eta;
    c.step = FixedStep{0.01};
    c.max_iters = 3000000;
    c.snapshot_stride = 1000000;
    c.init = InitSpec::random_positive(r0, static_cast<std::uint64_t>(attempts));
    const TrajectoryRecord traj = integrate(c, inst);
    if (traj.terminal.reason != TerminalReason::LossTol) continue;
    ++converged;
    const Vec w = theorem_weights(effective_xtilde(traj.initial().state, 2), 2);
    const OracleSolution q = min_weighted_l1_nonneg(inst, w);
    if (q.status != LpStatus::Optimal) continue;
    const BoundReport rep = theorem_gap_check(traj, q.objective, inst, p);
    if (rep.inside_hypotheses && rep.bound_satisfied.value_or(false)) ++satisfied;
    const LogLossFit fit = fit_log_loss_post_transient(traj);
    min_r2 = std::min(min_r2, fit.r2);
    if (fit.r2 >= 0.99 && fit.slope < 0.0) ++good_fit;
  }
  const bool pass = instances == 20 && converged > 0 && satisfied == converged && good_fit == converged;
  return {pass, std::to_string(instances) + " positive-kernel instances, converged " + std::to_string(converged) +
                    ", bound satisfied " + std::to_string(satisfied) + ", min post-transient R^2 " + num(min_r2)};
}

// ---- 12 ----
Outcome orthant() {
  Rng rng(1212);
  bool pass = true;
  std::string detail;
  for (auto [N, M] : {std::pair<long, long>{10, 3}, {12, 6}}) {
    const long trials = 2000;
    long hits = 0;
    for (long k = 0; k < trials; ++k) {
      if (positive_kernel_lp(rng.normal_mat(M, N)).exists) ++hits;
    }
    const double p = kernel_orthant_probability(N, N - M);
    const double se = std::sqrt(p * (1 - p) / trials);
    const double freq = static_cast<double>(hits) / trials;
    pass = pass && std::abs(freq - p) <= 3.0 * se;
    detail += "(N,M)=(" + std::to_string(N) + "," + std::to_string(M) + "): freq " + num(freq) + " vs p " + num(p) +
              ", " + num(std::abs(freq - p) / se) + " SE; ";
  }
  return {pass, detail};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.insert(std::stoi(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only, known;
  app.add_option("--only", only, "Comma-separated criteria to run");
  app.add_option("--known-failures", known, "Comma-separated criteria expected to fail");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected = parse_list(only);
  const std::set<int> expected_fail = parse_list(known);

  Campaigns camp;
  struct Criterion {
    int id;
    std::string name;
    double budget_s;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 10, gradients},
      {2, "invariant conservation", 30, conservation},
      {3, "norm, monotonicity and positivity", 60, [&] { return norm_and_monotonicity(camp); }},
      {4, "invariant comparison identity", 60, comparison_identity},
      {5, "LP oracle exactness", 30, lp_oracle},
      {6, "dynamic-rate coincidence", 0, dynamic_coincidence},
      {7, "Bregman monotonicity", 0, bregman},
      {8, "fig2 trend", 600, [&] { return fig2_trend(camp); }},
      {9, "fig3 trend", 600, [&] { return fig3_trend(camp); }},
      {10, "fig4 trend", 0, [&] { return fig4_trend(camp); }},
      {11, "magnified bound and exponential decay", 0, theorem_bound},
      {12, "orthant probability", 0, orthant},
  };

  int unexpected = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    const auto campaigns_before = camp.seconds;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = seconds_since(t0);
    // Each desk campaign is charged to the figure criterion that owns it.
    static const std::map<int, std::string> owner = {{8, "fig2"}, {9, "fig3"}, {10, "fig4"}};
    for (const auto& [fig, t] : camp.seconds) {
      const auto own = owner.find(c.id);
      const bool mine = own != owner.end() && own->second == fig;
      if (!campaigns_before.count(fig) && !mine) secs -= t;
      if (campaigns_before.count(fig) && mine) secs += t;
    }
    const bool in_time = c.budget_s <= 0.0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    std::printf("criterion %2d: %s  %s: %s [%.1f s%s]\n", c.id, pass ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.c_str(), secs, in_time ? "" : ", over time budget");
    std::fflush(stdout);
    if (pass == static_cast<bool>(expected_fail.count(c.id))) {
      ++unexpected;
      std::printf("              %s\n", pass ? "listed as a known failure but passed" : "unexpected failure");
    }
  }
  if (!expected_fail.empty()) {
    std::printf("known failures: %s\n", known.c_str());
  }
  return unexpected == 0 ? 0 : 1;
}
