#include "wnlab/cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wnlab/bench.hpp"
#include "wnlab/bounds.hpp"
#include "wnlab/errors.hpp"
#include "wnlab/invariants.hpp"
#include "wnlab/matrix_io.hpp"
#include "wnlab/oracle.hpp"
#include "wnlab/rng.hpp"
#include "wnlab/trajectory_io.hpp"

namespace wnlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path.string() + "': " + e.what());
  }
}

void write_text(const fs::path& dir, const std::string& name, const std::string& text) {
  io::write_file_atomic(dir / name, text);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

// Flags shared by run, audit, sweep and reproduce. Only flags given on the
// command line override the config file.
struct FlowFlags {
  std::string variant;
  double eta_ratio = 0.0;
  double r0 = 0.0;
  int depth = 0;
  long max_iters = 0;
  double loss_tol = 0.0;
  std::string renormalize;
  std::string step;
  std::uint64_t seed = 0;
  long stride = 0;
  long trials = 0;

  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    const auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_flow_flags(CLI::App* app, FlowFlags& f, bool campaign) {
  f.opts["seed"] = app->add_option("--seed", f.seed, "Master seed");
  f.opts["depth"] = app->add_option("--depth", f.depth, "Network depth L")->check(CLI::PositiveNumber);
  f.opts["max-iters"] = app->add_option("--max-iters", f.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  f.opts["loss-tol"] = app->add_option("--loss-tol", f.loss_tol, "Stop when the loss falls below this");
  f.opts["renormalize"] =
      app->add_option("--renormalize", f.renormalize, "Renormalize u after each step")->check(CLI::IsMember({"on", "off"}));
  f.opts["step"] = app->add_option("--step", f.step, "fixed:<h>, fixed, default or linesearch[:shrink[:c]]");
  if (campaign) {
    f.opts["trials"] = app->add_option("--trials", f.trials, "Trials per sweep point")->check(CLI::PositiveNumber);
  } else {
    f.opts["variant"] = app->add_option("--variant", f.variant, "plain, wn-constant, wn-dynamic or signed");
    f.opts["eta-ratio"] = app->add_option("--eta-ratio", f.eta_ratio, "Learning rate ratio (wn-constant)");
    f.opts["r0"] = app->add_option("--r0", f.r0, "Initial scale ||x0||");
    f.opts["stride"] = app->add_option("--stride", f.stride, "Snapshot stride")->check(CLI::PositiveNumber);
  }
}

void apply_flow_flags(const FlowFlags& f, FlowConfig& c) {
  if (f.given("depth")) c.depth = f.depth;
  if (f.given("max-iters")) c.max_iters = f.max_iters;
  if (f.given("loss-tol")) c.loss_tol = f.loss_tol;
  if (f.given("renormalize")) c.renormalize = f.renormalize == "on";
  if (f.given("step")) c.step = parse_step_policy(f.step);
  if (f.given("variant")) c.variant = parse_variant(f.variant);
  if (f.given("eta-ratio")) c.eta_ratio = f.eta_ratio;
  if (f.given("stride")) c.snapshot_stride = f.stride;
}

// Single-run config file: {"variant", "eta_ratio", "r0", "seed", "flow": {...}}.
FlowConfig run_config(const std::string& config_path, const FlowFlags& f) {
  FlowConfig c;
  double r0 = 1.0;
  std::uint64_t seed = 0;
  if (!config_path.empty()) {
    const json j = read_json_file(config_path);
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      try {
        if (k == "variant") c.variant = parse_variant(it->get<std::string>());
        else if (k == "eta_ratio") c.eta_ratio = it->get<double>();
        else if (k == "r0") r0 = it->get<double>();
        else if (k == "seed") seed = it->get<std::uint64_t>();
        else if (k == "flow") apply_flow_json(c, *it);
        else throw ConfigError("unknown key '" + k + "' in run config");
      } catch (const json::exception& e) {
        throw ConfigError("run config key '" + k + "': " + e.what());
      }
    }
  }
  apply_flow_flags(f, c);
  if (f.given("r0")) r0 = f.r0;
  if (f.given("seed")) seed = f.seed;
  c.seed = seed;
  c.init = InitSpec::random_positive(r0, seed);
  c.validate();
  return c;
}

void apply_campaign_flags(const FlowFlags& f, ExperimentSpec& spec) {
  apply_flow_flags(f, spec.flow);
  if (f.given("seed")) spec.seed = f.seed;
  if (f.given("trials")) spec.trials = f.trials;
  spec.validate();
}

// ---- gen ----

struct GenArgs {
  long N = 200, M = 50, sparsity = 10;
  std::string ground_truth = "gaussian_abs";
  std::uint64_t seed = 0;
  std::string format = "csv";
  std::string out;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  const ProblemInstance inst = gen_instance(a.N, a.M, parse_ground_truth(a.ground_truth), a.sparsity, a.seed);
  ensure_dir(a.out);
  io::save_instance(a.out, inst, a.format == "bin" ? io::Format::Binary : io::Format::Csv);
  out << "gen: " << a.ground_truth << " instance M=" << a.M << " N=" << a.N << " seed=" << a.seed << " -> "
      << a.out << '\n';
  return Ok;
}

// ---- run ----

struct RunArgs {
  std::string instance, config, out;
  FlowFlags flow;
};

int cmd_run(const RunArgs& a, std::ostream& out, const std::atomic<bool>* cancel) {
  const ProblemInstance inst = io::load_instance(a.instance);
  FlowConfig c = run_config(a.config, a.flow);
  c.cancel = cancel;
  const TrajectoryRecord traj = integrate(c, inst);
  if (traj.cancelled) return Interrupted;
  if (traj.terminal.reason == TerminalReason::Diverged) {
    throw DivergenceError("run diverged at iteration " + std::to_string(traj.terminal.iters) +
                          "; try a smaller --step");
  }

  ensure_dir(a.out);
  std::ostringstream t, l;
  io::write_trajectory_csv(t, traj);
  io::write_loss_history_csv(l, traj);
  write_text(a.out, "trajectory.csv", t.str());
  write_text(a.out, "loss.csv", l.str());
  write_text(a.out, "terminal.json", io::terminal_summary_json(traj) + "\n");
  out << "run: " << to_string(c.variant) << " reason=" << to_string(traj.terminal.reason)
      << " iters=" << traj.terminal.iters << " loss=" << fmt(traj.terminal.final_loss)
      << " l1=" << fmt(traj.terminal.final_xtilde.lpNorm<1>()) << '\n';
  return Ok;
}

// ---- campaigns ----

std::string panel_header(const std::string& figure, char panel, const std::string& x, const std::string& y) {
  return "# figure=" + figure + " panel=" + panel + " x=" + x + " y=" + y + "\n";
}

// Panel a: error metric against the swept abscissa.
std::string error_panel(const std::string& figure, const std::vector<SummaryRow>& rows, bool eta_axis,
                        bool use_eps2) {
  std::ostringstream o;
  o << panel_header(figure, 'a', eta_axis ? "eta" : "r0", use_eps2 ? "eps2" : "eps1");
  o << "x,variant,mean,min,max,count\n";
  std::vector<double> etas;
  for (const auto& r : rows)
    if (r.variant != Variant::Plain) etas.push_back(r.eta_ratio);
  for (const auto& r : rows) {
    const Stat& s = use_eps2 ? r.eps2 : r.eps1;
    auto line = [&](double x) {
      o << fmt(x) << ',' << to_string(r.variant) << ',' << fmt(s.mean) << ',' << fmt(s.min) << ',' << fmt(s.max)
        << ',' << s.count << '\n';
    };
    // Plain GD has no η̃; on an η̃ axis it is drawn as a constant reference.
    if (eta_axis && r.variant == Variant::Plain) {
      for (double e : etas) line(e);
    } else {
      line(eta_axis ? r.eta_ratio : r.r0);
    }
  }
  return o.str();
}

// Panel b: per-trial loss curves.
std::string loss_panel(const std::string& figure, const std::vector<TrialResult>& results) {
  std::ostringstream o;
  o << panel_header(figure, 'b', "iter", "loss");
  o << "variant,r0,eta,trial,iter,loss\n";
  for (const auto& r : results) {
    for (const auto& [it, loss] : r.loss_curve) {
      o << to_string(r.variant) << ',' << fmt(r.r0) << ',' << fmt(r.eta_ratio) << ',' << r.trial << ',' << it << ','
        << fmt(loss) << '\n';
    }
  }
  return o.str();
}

struct CampaignOutcome {
  std::vector<TrialResult> results;
  bool interrupted = false;
};

CampaignOutcome execute_campaign(const ExperimentSpec& spec, const fs::path& dir, const std::atomic<bool>* cancel) {
  ensure_dir(dir);
  CampaignOptions opts;
  opts.cancel = cancel;
  CampaignOutcome oc;
  oc.results = run_campaign(spec, opts);
  oc.interrupted = cancel && cancel->load();
  std::ostringstream res, sum;
  write_results_csv(res, oc.results);
  write_summary_csv(sum, aggregate(oc.results));
  write_text(dir, "results.csv", res.str());
  write_text(dir, "summary.csv", sum.str());
  write_text(dir, "spec.json", spec_to_json(spec).dump(2) + "\n");
  return oc;
}

void campaign_summary(std::ostream& out, const std::string& what, const ExperimentSpec& spec,
                      const CampaignOutcome& oc) {
  long failed = 0, converged = 0;
  for (const auto& r : oc.results) {
    if (!r.error.empty()) ++failed;
    else if (r.reason == TerminalReason::LossTol) ++converged;
  }
  const std::size_t expected = spec.sweep.size() * static_cast<std::size_t>(spec.trials);
  out << what << ": " << oc.results.size() << "/" << expected << " trials, " << converged << " converged, "
      << failed << " failed" << (oc.interrupted ? " (interrupted, partial results written)" : "") << '\n';
}

struct SweepArgs {
  std::string config, out;
  FlowFlags flow;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out, const std::atomic<bool>* cancel) {
  ExperimentSpec spec = spec_from_json(read_json_file(a.config));
  apply_campaign_flags(a.flow, spec);
  const CampaignOutcome oc = execute_campaign(spec, a.out, cancel);
  campaign_summary(out, "sweep " + spec.name, spec, oc);
  return oc.interrupted ? Interrupted : Ok;
}

struct ReproduceArgs {
  std::string figure, scale = "desk", out;
  double budget = 0.0;  // GFLOP; 0 = unset
  FlowFlags flow;
};

int cmd_reproduce(const ReproduceArgs& a, std::ostream& out, const std::atomic<bool>* cancel) {
  const Scale scale = parse_scale(a.scale);
  ExperimentSpec spec = figure_spec(a.figure, scale);
  apply_campaign_flags(a.flow, spec);
  const double gflop = 2.0 * campaign_cost(spec) / 1e9;
  if ((scale == Scale::Paper || a.budget > 0.0) && gflop > a.budget) {
    std::ostringstream msg;
    msg << a.figure << " at " << a.scale << " scale needs about " << fmt(std::ceil(gflop))
        << " GFLOP; rerun with --budget " << fmt(std::ceil(gflop)) << " or more";
    throw ConfigError(msg.str());
  }
  const fs::path dir = a.out;
  const CampaignOutcome oc = execute_campaign(spec, dir, cancel);
  const bool eta_axis = a.figure == "fig3";
  const bool eps2 = a.figure == "fig4" || a.figure == "fig5";
  write_text(dir, a.figure + "_a.csv", error_panel(a.figure, aggregate(oc.results), eta_axis, eps2));
  write_text(dir, a.figure + "_b.csv", loss_panel(a.figure, oc.results));
  campaign_summary(out, "reproduce " + a.figure + " (" + a.scale + ")", spec, oc);
  return oc.interrupted ? Interrupted : Ok;
}

// ---- audit ----

struct AuditArgs {
  std::string trajectory, instance, config, out;
  double eta_override = 0.0;
  long references = 5;
  double drift_tol = 1e-4;
  double residual_tol = 1e-6;
  FlowFlags flow;
  CLI::Option* eta_opt = nullptr;
};

// Unit-weight and random-weight minimizers over S₊, plus x* when present.
std::vector<ReferencePoint> reference_points(const ProblemInstance& inst, long count, std::uint64_t seed) {
  std::vector<ReferencePoint> refs;
  if (inst.x_star && (inst.x_star->array() >= 0.0).all()) refs.push_back({"x_star", *inst.x_star});
  for (long k = 0; static_cast<long>(refs.size()) < count && k < 4 * count; ++k) {
    Vec w = Vec::Ones(inst.cols());
    if (k > 0) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
      w = rng.uniform_vec(inst.cols(), 0.5, 2.0);
    }
    const OracleSolution s = min_weighted_l1_nonneg(inst, w);
    if (s.status != LpStatus::Optimal) break;
    refs.push_back({k == 0 ? "lp_unit" : "lp_w" + std::to_string(k), s.z});
  }
  return refs;
}

json audit_checks(const std::vector<DriftReport>& reports, const AuditArgs& a) {
  json checks = json::array();
  for (const auto& r : reports) {
    json c;
    c["quantity"] = r.quantity;
    if (!r.applicable) {
      c["status"] = "skipped";
      c["note"] = r.note;
      checks.push_back(c);
      continue;
    }
    bool pass = true;
    if (r.quantity == "loss_monotonicity" || r.quantity == "positivity" || r.quantity == "bregman_monotonicity") {
      pass = r.violations == 0;
      c["violations"] = r.violations;
    } else if (r.quantity == "u_norm") {
      pass = r.max_abs_drift <= 1e-12;
      c["tolerance"] = 1e-12;
    } else if (r.quantity == "comparison_residual") {
      pass = r.max_abs_drift <= a.residual_tol;
      c["tolerance"] = a.residual_tol;
    } else {
      pass = r.max_abs_drift <= a.drift_tol;
      c["tolerance"] = a.drift_tol;
    }
    c["value"] = r.max_abs_drift;
    c["status"] = pass ? "pass" : "fail";
    checks.push_back(c);
  }
  return checks;
}

int cmd_audit(const AuditArgs& a, std::ostream& out, const std::atomic<bool>* cancel) {
  const ProblemInstance inst = io::load_instance(a.instance);
  TrajectoryRecord traj;
  if (!a.trajectory.empty()) {
    traj = io::read_trajectory_csv(fs::path(a.trajectory));
    if (!traj.snapshots.empty()) {
      const auto n = std::visit([](const auto& s) -> Eigen::Index {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseState>) return s.x.size();
        else if constexpr (std::is_same_v<T, PolarState>) return s.u.size();
        else return s.u_plus.size();
      }, traj.snapshots.front().state);
      if (n != inst.cols()) throw DegenerateInstanceError("trajectory dimension does not match the instance");
    }
  } else {
    FlowFlags f = a.flow;
    FlowConfig c = run_config(a.config, f);
    if (!f.given("stride") && a.config.empty()) c.snapshot_stride = 1;
    if (!f.given("max-iters") && a.config.empty()) c.max_iters = 10000;
    c.cancel = cancel;
    traj = integrate(c, inst);
    if (traj.cancelled) return Interrupted;
  }
  if (a.eta_opt && a.eta_opt->count()) traj.eta_ratio = a.eta_override;

  const Projectors proj = projectors(inst);
  DriftOptions opts;
  opts.eta_ratio = traj.eta_ratio;
  if (traj.variant == Variant::WnDynamic) opts.references = reference_points(inst, a.references, a.flow.seed);
  const std::vector<DriftReport> reports = drift_report(traj, proj, opts);

  json j;
  j["variant"] = to_string(traj.variant);
  j["depth"] = traj.depth;
  j["eta_ratio"] = traj.eta_ratio;
  j["snapshots"] = traj.snapshots.size();
  j["terminal"] = json::parse(io::terminal_summary_json(traj));
  j["reports"] = json::array();
  for (const auto& r : reports) {
    j["reports"].push_back({{"quantity", r.quantity},
                            {"applicable", r.applicable},
                            {"note", r.note},
                            {"max_abs_drift", r.max_abs_drift},
                            {"max_step_drift", r.max_step_drift},
                            {"violations", r.violations},
                            {"max_violation", r.max_violation}});
  }
  j["checks"] = audit_checks(reports, a);
  j["references"] = json::array();
  for (const auto& ref : opts.references) j["references"].push_back(ref.id);

  long failed = 0, passed = 0;
  for (const auto& c : j["checks"]) {
    if (c["status"] == "fail") ++failed;
    if (c["status"] == "pass") ++passed;
  }
  j["pass"] = failed == 0;
  const fs::path dest = a.out.empty() ? fs::path("audit.json") : fs::path(a.out);
  if (dest.has_parent_path()) ensure_dir(dest.parent_path());
  io::write_file_atomic(dest, j.dump(2) + "\n");
  out << "audit: " << to_string(traj.variant) << " " << passed << " passed, " << failed << " failed -> "
      << dest.string() << '\n';
  return Ok;
}

// ---- oracle ----

struct OracleArgs {
  std::string instance, weights, out;
  bool signed_lp = false;
  bool kernel = false;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  const ProblemInstance inst = io::load_instance(a.instance);
  std::optional<Vec> w;
  if (!a.weights.empty()) w = io::read_vector(a.weights);
  const OracleSolution s = a.signed_lp ? min_l1_signed(inst) : min_weighted_l1_nonneg(inst, w);

  json j;
  j["problem"] = a.signed_lp ? "min_l1_signed" : "min_weighted_l1_nonneg";
  j["status"] = to_string(s.status);
  j["iterations"] = s.iterations;
  if (s.status == LpStatus::Optimal) {
    j["objective"] = s.objective;
    j["min_reduced_cost"] = s.min_reduced_cost;
    j["z"] = std::vector<double>(s.z.data(), s.z.data() + s.z.size());
  }
  if (a.kernel) {
    const KernelWitness k = positive_kernel_lp(inst.A);
    j["kernel"] = {{"exists", k.exists}, {"margin", k.t}};
  }
  ensure_dir(a.out);
  write_text(a.out, "oracle.json", j.dump(2) + "\n");
  out << "oracle: status=" << to_string(s.status);
  if (s.status == LpStatus::Optimal) out << " objective=" << fmt(s.objective);
  out << '\n';
  return Ok;
}

// ---- prob ----

struct ProbArgs {
  long N = 0, K = -1, M = -1;
  std::string out;
};

int cmd_prob(const ProbArgs& a, std::ostream& out) {
  if ((a.K >= 0) == (a.M >= 0)) throw ConfigError("prob needs exactly one of --K or --M");
  const long K = a.K >= 0 ? a.K : a.N - a.M;
  const double p = kernel_orthant_probability(a.N, K);
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_text(a.out, "prob.json", json{{"N", a.N}, {"K", K}, {"probability", p}}.dump(2) + "\n");
  }
  out << fmt(p) << '\n';
  return Ok;
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Usage: return Usage;
    case ErrorCategory::Data: return Data;
    case ErrorCategory::Numerical: return Numerical;
  }
  return Numerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const std::atomic<bool>* cancel) {
  CLI::App app{"Weight-normalized diagonal network experiments"};
  app.name("wnlab");
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a random instance");
  g->add_option("--N", gen.N, "Columns")->check(CLI::PositiveNumber);
  g->add_option("--M", gen.M, "Rows")->check(CLI::PositiveNumber);
  g->add_option("--ground-truth", gen.ground_truth, "gaussian_abs, sparse_abs or sparse_signed");
  g->add_option("--sparsity", gen.sparsity, "Support size for sparse ground truths");
  g->add_option("--seed", gen.seed, "Seed");
  g->add_option("--format", gen.format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
  g->add_option("--out", gen.out, "Instance directory")->required();

  RunArgs run_a;
  auto* r = app.add_subcommand("run", "Integrate one flow");
  r->add_option("--instance", run_a.instance, "Instance directory")->required();
  r->add_option("--config", run_a.config, "Run config JSON");
  r->add_option("--out", run_a.out, "Output directory")->required();
  add_flow_flags(r, run_a.flow, false);

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Run a campaign from an experiment spec");
  s->add_option("--config", sweep.config, "Experiment spec JSON")->required();
  s->add_option("--out", sweep.out, "Output directory")->required();
  add_flow_flags(s, sweep.flow, true);

  ReproduceArgs rep;
  auto* p = app.add_subcommand("reproduce", "Run the campaign behind a figure");
  p->add_option("figure", rep.figure, "fig2, fig3, fig4 or fig5")->required()->check(
      CLI::IsMember({"fig2", "fig3", "fig4", "fig5"}));
  p->add_option("--scale", rep.scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  p->add_option("--budget", rep.budget, "Compute budget in GFLOP");
  p->add_option("--out", rep.out, "Output directory")->required();
  add_flow_flags(p, rep.flow, true);

  AuditArgs audit;
  auto* a = app.add_subcommand("audit", "Invariant and monotonicity audit of a trajectory");
  a->add_option("--trajectory", audit.trajectory, "Trajectory CSV (omit to integrate a fresh run)");
  a->add_option("--instance", audit.instance, "Instance directory")->required();
  a->add_option("--config", audit.config, "Run config JSON when no trajectory is given");
  a->add_option("--out", audit.out, "Report path (default audit.json)");
  a->add_option("--references", audit.references, "Reference points for Bregman checks");
  a->add_option("--drift-tol", audit.drift_tol, "Conservation tolerance");
  a->add_option("--residual-tol", audit.residual_tol, "Comparison residual tolerance");
  add_flow_flags(a, audit.flow, false);
  // --eta-ratio doubles as an override for trajectory files.
  audit.eta_opt = audit.flow.opts["eta-ratio"];

  OracleArgs orc;
  auto* o = app.add_subcommand("oracle", "Solve the minimum-norm LP");
  o->add_option("--instance", orc.instance, "Instance directory")->required();
  o->add_option("--weights", orc.weights, "Weight vector file");
  o->add_flag("--signed", orc.signed_lp, "Unconstrained-sign l1 problem");
  o->add_flag("--kernel", orc.kernel, "Also test for a positive kernel vector");
  o->add_option("--out", orc.out, "Output directory")->required();

  ProbArgs prob;
  auto* q = app.add_subcommand("prob", "Probability that a random kernel meets the open orthant");
  q->add_option("--N", prob.N, "Ambient dimension")->required()->check(CLI::PositiveNumber);
  q->add_option("--K", prob.K, "Kernel dimension");
  q->add_option("--M", prob.M, "Rows (K = N - M)");
  q->add_option("--out", prob.out, "Output directory");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "wnlab: " << e.what() << '\n';
    return Usage;
  }

  audit.eta_override = audit.flow.eta_ratio;

  try {
    if (*g) return cmd_gen(gen, out);
    if (*r) return cmd_run(run_a, out, cancel);
    if (*s) return cmd_sweep(sweep, out, cancel);
    if (*p) return cmd_reproduce(rep, out, cancel);
    if (*a) return cmd_audit(audit, out, cancel);
    if (*o) return cmd_oracle(orc, out);
    if (*q) return cmd_prob(prob, out);
  } catch (const Error& e) {
    err << "wnlab: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "wnlab: " << e.what() << '\n';
    return Data;
  } catch (const std::exception& e) {
    err << "wnlab: " << e.what() << '\n';
    return Numerical;
  }
  return Usage;
}

}  // namespace wnlab::cli
