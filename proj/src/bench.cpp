#include "wnlab/bench.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "wnlab/errors.hpp"
#include "wnlab/oracle.hpp"
#include "wnlab/rng.hpp"

namespace wnlab {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

double parse_double_field(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("invalid " + what + " '" + s + "'");
  return v;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; })) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

}  // namespace

void apply_flow_json(FlowConfig& f, const json& j) {
  reject_unknown(j, {"depth", "max_iters", "loss_tol", "step", "snapshot_stride", "renormalize",
                     "positivity", "dynamic_path", "nonnegative"},
                 "flow");
  f.depth = get_or<int>(j, "depth", f.depth);
  f.max_iters = get_or<long>(j, "max_iters", f.max_iters);
  f.loss_tol = get_or<double>(j, "loss_tol", f.loss_tol);
  f.snapshot_stride = get_or<long>(j, "snapshot_stride", f.snapshot_stride);
  f.renormalize = get_or<bool>(j, "renormalize", f.renormalize);
  f.nonnegative = get_or<bool>(j, "nonnegative", f.nonnegative);
  if (j.contains("step")) f.step = parse_step_policy(get_or<std::string>(j, "step", "default"));
  if (j.contains("positivity")) {
    const auto p = get_or<std::string>(j, "positivity", "continue");
    if (p == "continue") f.positivity = PositivityPolicy::SignalAndContinue;
    else if (p == "halt") f.positivity = PositivityPolicy::Halt;
    else throw ConfigError("positivity must be 'continue' or 'halt'");
  }
  if (j.contains("dynamic_path")) {
    const auto p = get_or<std::string>(j, "dynamic_path", "reduced");
    if (p == "reduced") f.dynamic_path = DynamicPath::Reduced;
    else if (p == "polar") f.dynamic_path = DynamicPath::Polar;
    else throw ConfigError("dynamic_path must be 'reduced' or 'polar'");
  }
}

namespace {

std::vector<std::pair<long, double>> downsample(const std::vector<double>& loss, long points) {
  std::vector<std::pair<long, double>> out;
  if (loss.empty() || points <= 0) return out;
  const long n = static_cast<long>(loss.size());
  const long stride = std::max(1L, (n + points - 1) / points);
  for (long i = 0; i < n; i += stride) out.emplace_back(i, loss[static_cast<std::size_t>(i)]);
  if (out.back().first != n - 1) out.emplace_back(n - 1, loss.back());
  return out;
}

template <class Fn>
void parallel_for(std::size_t tasks, unsigned threads, const std::atomic<bool>* cancel, Fn fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      if (cancel && cancel->load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks) return;
      fn(i);
    }
  };
  if (threads <= 1) {
    worker();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
}

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) {
    s.mean = s.min = s.max = std::nan("");
    return s;
  }
  s.count = static_cast<long>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

struct TrialData {
  ProblemInstance inst;
  std::uint64_t init_seed = 0;
  std::optional<double> Q;
  std::string error;
};

}  // namespace

std::string to_string(GroundTruth g) {
  switch (g) {
    case GroundTruth::GaussianAbs: return "gaussian_abs";
    case GroundTruth::SparseAbs: return "sparse_abs";
    case GroundTruth::SparseSigned: return "sparse_signed";
  }
  return "?";
}

GroundTruth parse_ground_truth(const std::string& s) {
  if (s == "gaussian_abs") return GroundTruth::GaussianAbs;
  if (s == "sparse_abs") return GroundTruth::SparseAbs;
  if (s == "sparse_signed") return GroundTruth::SparseSigned;
  throw ConfigError("unknown ground truth '" + s + "' (gaussian_abs, sparse_abs, sparse_signed)");
}

StepPolicy parse_step_policy(const std::string& s) {
  if (s == "default" || s == "fixed") return FixedStep{};
  if (s.rfind("fixed:", 0) == 0) {
    const double h = parse_double_field(s.substr(6), "step size");
    if (!(h > 0.0)) throw ConfigError("fixed step must be positive");
    return FixedStep{h};
  }
  if (s.rfind("linesearch", 0) == 0) {
    LineSearch ls;
    std::string rest = s.substr(10);
    if (!rest.empty()) {
      if (rest[0] != ':') throw ConfigError("invalid step policy '" + s + "'");
      rest = rest.substr(1);
      const auto colon = rest.find(':');
      ls.shrink = parse_double_field(rest.substr(0, colon), "line-search shrink");
      if (colon != std::string::npos) ls.armijo_c = parse_double_field(rest.substr(colon + 1), "armijo_c");
    }
    return ls;
  }
  throw ConfigError("invalid step policy '" + s + "' (default, fixed:<h>, linesearch)");
}

std::string to_string(const StepPolicy& p) {
  if (const auto* f = std::get_if<FixedStep>(&p)) return f->h > 0.0 ? "fixed:" + fmt(f->h) : "default";
  const auto& ls = std::get<LineSearch>(p);
  return "linesearch:" + fmt(ls.shrink) + ":" + fmt(ls.armijo_c);
}

void ExperimentSpec::validate() {
  if (N < 1 || M < 1) throw ConfigError("N and M must be positive");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (ground_truth != GroundTruth::GaussianAbs && (sparsity < 1 || sparsity > N)) {
    throw ConfigError("sparsity must satisfy 1 <= s <= N");
  }
  if (sweep.empty()) throw ConfigError("sweep is empty");
  for (SweepPoint& p : sweep) {
    if (!(p.r0 > 0.0)) throw ConfigError("sweep r0 must be positive");
    if (ground_truth == GroundTruth::SparseSigned) p.variant = Variant::Signed;
    if (p.variant == Variant::WnConstant && !(p.eta_ratio > 0.0)) throw ConfigError("sweep eta must be positive");
  }
  FlowConfig probe = flow;
  probe.variant = ground_truth == GroundTruth::SparseSigned ? Variant::Signed : Variant::Plain;
  probe.init = InitSpec::random_positive(1.0, 0);
  probe.validate();
}

ExperimentSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment spec must be a JSON object");
  reject_unknown(j, {"name", "N", "M", "ground_truth", "sparsity", "sweep", "trials", "flow", "seed",
                     "theorem_check", "curve_points"},
                 "experiment spec");
  ExperimentSpec s;
  s.name = get_or<std::string>(j, "name", s.name);
  s.N = get_or<long>(j, "N", s.N);
  s.M = get_or<long>(j, "M", s.M);
  if (j.contains("ground_truth")) s.ground_truth = parse_ground_truth(get_or<std::string>(j, "ground_truth", ""));
  s.sparsity = get_or<long>(j, "sparsity", s.sparsity);
  s.trials = get_or<long>(j, "trials", s.trials);
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  s.theorem_check = get_or<bool>(j, "theorem_check", s.theorem_check);
  s.curve_points = get_or<long>(j, "curve_points", s.curve_points);
  if (j.contains("flow")) apply_flow_json(s.flow, j.at("flow"));
  if (j.contains("sweep")) {
    if (!j.at("sweep").is_array()) throw ConfigError("sweep must be an array");
    for (const json& p : j.at("sweep")) {
      reject_unknown(p, {"r0", "eta", "variant"}, "sweep point");
      SweepPoint sp;
      sp.r0 = get_or<double>(p, "r0", sp.r0);
      sp.eta_ratio = get_or<double>(p, "eta", sp.eta_ratio);
      sp.variant = parse_variant(get_or<std::string>(p, "variant", "wn-constant"));
      s.sweep.push_back(sp);
    }
  }
  return s;
}

json spec_to_json(const ExperimentSpec& s) {
  json j;
  j["name"] = s.name;
  j["N"] = s.N;
  j["M"] = s.M;
  j["ground_truth"] = to_string(s.ground_truth);
  j["sparsity"] = s.sparsity;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["theorem_check"] = s.theorem_check;
  j["curve_points"] = s.curve_points;
  j["flow"] = {{"depth", s.flow.depth},
               {"max_iters", s.flow.max_iters},
               {"loss_tol", s.flow.loss_tol},
               {"step", to_string(s.flow.step)},
               {"snapshot_stride", s.flow.snapshot_stride},
               {"renormalize", s.flow.renormalize},
               {"nonnegative", s.flow.nonnegative},
               {"positivity", s.flow.positivity == PositivityPolicy::Halt ? "halt" : "continue"},
               {"dynamic_path", s.flow.dynamic_path == DynamicPath::Polar ? "polar" : "reduced"}};
  j["sweep"] = json::array();
  for (const SweepPoint& p : s.sweep) {
    j["sweep"].push_back({{"r0", p.r0}, {"eta", p.eta_ratio}, {"variant", to_string(p.variant)}});
  }
  return j;
}

ProblemInstance gen_instance(long N, long M, GroundTruth gt, long sparsity, std::uint64_t seed) {
  if (N < 1 || M < 1) throw ConfigError("N and M must be positive");
  if (gt != GroundTruth::GaussianAbs && (sparsity < 1 || sparsity > N)) {
    throw ConfigError("sparsity must satisfy 1 <= s <= N");
  }
  Rng rng(seed);
  ProblemInstance inst;
  inst.A = rng.normal_mat(M, N) / std::sqrt(static_cast<double>(M));
  Vec x = Vec::Zero(N);
  if (gt == GroundTruth::GaussianAbs) {
    x = rng.normal_vec(N).cwiseAbs();
  } else {
    // Partial Fisher–Yates for the support, then Gaussian values on it.
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(N));
    std::iota(idx.begin(), idx.end(), 0);
    for (long i = 0; i < sparsity; ++i) {
      const auto j = static_cast<long>(i + static_cast<long>(rng.below(static_cast<std::uint64_t>(N - i))));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    for (long i = 0; i < sparsity; ++i) x[idx[static_cast<std::size_t>(i)]] = rng.normal();
    if (gt == GroundTruth::SparseAbs) x = x.cwiseAbs();
    x *= static_cast<double>(sparsity) / x.lpNorm<1>();
  }
  inst.b = inst.A * x;
  inst.x_star = x;
  return inst;
}

unsigned worker_count(unsigned requested, std::size_t tasks) {
  unsigned n = requested;
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WNLAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min(n, static_cast<unsigned>(cap));
  }
  return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, tasks)));
}

std::vector<TrialResult> run_campaign(const ExperimentSpec& spec_in, const CampaignOptions& opts) {
  ExperimentSpec spec = spec_in;
  spec.validate();
  const auto T = static_cast<std::size_t>(spec.trials);

  std::vector<TrialData> data(T);
  parallel_for(T, worker_count(opts.threads, T), opts.cancel, [&](std::size_t k) {
    TrialData& d = data[k];
    d.inst = gen_instance(spec.N, spec.M, spec.ground_truth, spec.sparsity, derive_seed(spec.seed, 2 * k));
    d.init_seed = derive_seed(spec.seed, 2 * k + 1);
    try {
      const OracleSolution sol = spec.ground_truth == GroundTruth::SparseSigned ? min_l1_signed(d.inst)
                                                                                : min_weighted_l1_nonneg(d.inst);
      if (sol.status == LpStatus::Optimal) {
        d.Q = sol.objective;
      } else {
        d.error = "oracle status " + to_string(sol.status);
      }
    } catch (const Error& e) {
      d.error = std::string("oracle: ") + e.what();
    }
  });

  const std::size_t P = spec.sweep.size();
  std::vector<std::optional<TrialResult>> slots(P * T);
  std::mutex mu;
  parallel_for(P * T, worker_count(opts.threads, P * T), opts.cancel, [&](std::size_t task) {
    const std::size_t p = task / T, k = task % T;
    const SweepPoint& sp = spec.sweep[p];
    const TrialData& d = data[k];
    TrialResult r;
    r.point = p;
    r.trial = static_cast<long>(k);
    r.r0 = sp.r0;
    r.eta_ratio = sp.variant == Variant::WnConstant ? sp.eta_ratio : 0.0;
    r.variant = sp.variant;
    if (d.Q) r.Q = *d.Q;

    FlowConfig c = spec.flow;
    c.variant = sp.variant;
    c.eta_ratio = sp.eta_ratio;
    c.init = InitSpec::random_positive(sp.r0, d.init_seed);
    c.snapshot_stride = c.max_iters + 1;  // initial and final snapshots only
    c.record_history = spec.curve_points > 0;
    c.cancel = opts.cancel;
    try {
      const TrajectoryRecord traj = integrate(c, d.inst);
      if (traj.cancelled) return;
      r.reason = traj.terminal.reason;
      r.iters = traj.terminal.iters;
      r.t = traj.terminal.t;
      r.final_loss = traj.terminal.final_loss;
      r.positivity_violations = traj.positivity_violations;
      r.step_h = traj.step_h;
      if (r.reason == TerminalReason::Diverged) {
        r.error = "diverged";
      } else {
        const Vec& xt = traj.terminal.final_xtilde;
        r.l1_xtilde = xt.lpNorm<1>();
        if (d.Q) r.eps1 = r.l1_xtilde - *d.Q;
        r.eps2 = (xt - *d.inst.x_star).lpNorm<1>();
      }
      if (!d.error.empty() && r.error.empty()) r.error = d.error;
      if (spec.theorem_check && r.reason == TerminalReason::LossTol && sp.variant != Variant::Signed) {
        try {
          double Qw = d.Q.value_or(0.0);
          if (c.depth != 2 || !d.Q) {
            const Vec w = theorem_weights(effective_xtilde(traj.initial().state, c.depth), c.depth);
            const OracleSolution sol = min_weighted_l1_nonneg(d.inst, w);
            if (sol.status != LpStatus::Optimal) throw NotApplicableError("weighted oracle not optimal");
            Qw = sol.objective;
          }
          r.bound = theorem_gap_check(traj, Qw, d.inst, projectors(d.inst));
        } catch (const Error&) {
        }
      }
      if (spec.curve_points > 0) r.loss_curve = downsample(traj.loss_history, spec.curve_points);
    } catch (const Error& e) {
      r.error = e.what();
    }
    std::lock_guard<std::mutex> lock(mu);
    if (opts.on_result) opts.on_result(r);
    slots[task] = std::move(r);
  });

  std::vector<TrialResult> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  return out;
}

std::vector<SummaryRow> aggregate(const std::vector<TrialResult>& results) {
  std::vector<SummaryRow> rows;
  std::size_t max_point = 0;
  for (const auto& r : results) max_point = std::max(max_point, r.point + 1);
  for (std::size_t p = 0; p < max_point; ++p) {
    std::vector<double> e1, e2, it, fl;
    SummaryRow row;
    row.point = p;
    bool seen = false;
    for (const auto& r : results) {
      if (r.point != p) continue;
      if (!seen) {
        row.r0 = r.r0;
        row.eta_ratio = r.eta_ratio;
        row.variant = r.variant;
        seen = true;
      }
      if (!r.error.empty()) {
        ++row.trials_failed;
        continue;
      }
      ++row.trials_ok;
      if (r.reason == TerminalReason::LossTol) ++row.converged;
      if (r.eps1) e1.push_back(*r.eps1);
      if (r.eps2) e2.push_back(*r.eps2);
      it.push_back(static_cast<double>(r.iters));
      fl.push_back(r.final_loss);
    }
    if (!seen) continue;
    row.eps1 = stat_of(e1);
    row.eps2 = stat_of(e2);
    row.iters = stat_of(it);
    row.final_loss = stat_of(fl);
    rows.push_back(row);
  }
  return rows;
}

void write_results_csv(std::ostream& out, const std::vector<TrialResult>& results) {
  out << "point,trial,variant,r0,eta,eps1,eps2,Q,l1_xtilde,final_loss,iters,t,reason,"
         "positivity_violations,step_h,bound_epsilon,bound_gap,bound_satisfied,error\n";
  for (const auto& r : results) {
    out << r.point << ',' << r.trial << ',' << to_string(r.variant) << ',' << fmt(r.r0) << ','
        << fmt(r.eta_ratio) << ',' << fmt_opt(r.eps1) << ',' << fmt_opt(r.eps2) << ',' << fmt(r.Q) << ','
        << fmt(r.l1_xtilde) << ',' << fmt(r.final_loss) << ',' << r.iters << ',' << fmt(r.t) << ','
        << to_string(r.reason) << ',' << r.positivity_violations << ',' << fmt(r.step_h) << ',';
    if (r.bound) {
      out << fmt_opt(r.bound->epsilon) << ',' << fmt(r.bound->achieved_gap) << ',';
      if (r.bound->bound_satisfied) out << (*r.bound->bound_satisfied ? "true" : "false");
    } else {
      out << ",,";
    }
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << ',' << err << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "point,variant,r0,eta,trials_ok,trials_failed,converged,eps1_mean,eps1_min,eps1_max,"
         "eps2_mean,eps2_min,eps2_max,iters_mean,iters_min,iters_max,final_loss_mean\n";
  for (const auto& r : rows) {
    out << r.point << ',' << to_string(r.variant) << ',' << fmt(r.r0) << ',' << fmt(r.eta_ratio) << ','
        << r.trials_ok << ',' << r.trials_failed << ',' << r.converged << ',' << fmt(r.eps1.mean) << ','
        << fmt(r.eps1.min) << ',' << fmt(r.eps1.max) << ',' << fmt(r.eps2.mean) << ',' << fmt(r.eps2.min)
        << ',' << fmt(r.eps2.max) << ',' << fmt(r.iters.mean) << ',' << fmt(r.iters.min) << ','
        << fmt(r.iters.max) << ',' << fmt(r.final_loss.mean) << '\n';
  }
}

Scale parse_scale(const std::string& s) {
  if (s == "desk") return Scale::Desk;
  if (s == "paper") return Scale::Paper;
  throw ConfigError("scale must be 'desk' or 'paper'");
}

ExperimentSpec figure_spec(const std::string& id, Scale scale) {
  ExperimentSpec s;
  s.name = id;
  const bool paper = scale == Scale::Paper;
  s.N = paper ? 1000 : 200;
  s.M = paper ? 150 : 50;
  s.trials = paper ? 10 : 3;
  s.flow.depth = 2;
  s.flow.loss_tol = 1e-12;
  s.flow.max_iters = paper ? 1000000 : 200000;
  s.flow.step = FixedStep{};
  s.curve_points = 200;
  const std::vector<double> r0_grid = {0.1, 0.3, 1.0, 3.0, 10.0};

  if (id == "fig2") {
    s.seed = 2;
    s.ground_truth = GroundTruth::GaussianAbs;
    for (double r0 : r0_grid) {
      s.sweep.push_back({r0, 0.1, Variant::Plain});
      s.sweep.push_back({r0, 0.1, Variant::WnConstant});
    }
  } else if (id == "fig3") {
    s.seed = 3;
    s.ground_truth = GroundTruth::GaussianAbs;
    s.sweep.push_back({1.0, 0.1, Variant::Plain});
    for (double eta : {1.0, 0.3, 0.1, 0.03}) s.sweep.push_back({1.0, eta, Variant::WnConstant});
    // Small η̃ slows the direction flow; desk runs at η̃ = 0.1 need ~1.7e6 steps.
    if (!paper) s.flow.max_iters = 2000000;
  } else if (id == "fig4") {
    s.seed = 4;
    s.ground_truth = GroundTruth::SparseAbs;
    s.sparsity = 10;
    std::vector<double> grid = r0_grid;
    grid.push_back(100.0);
    for (double r0 : grid) {
      s.sweep.push_back({r0, 0.1, Variant::Plain});
      s.sweep.push_back({r0, 0.1, Variant::WnConstant});
    }
  } else if (id == "fig5") {
    s.seed = 5;
    s.ground_truth = GroundTruth::SparseSigned;
    s.sparsity = 10;
    for (double r0 : r0_grid) s.sweep.push_back({r0, 0.1, Variant::Signed});
  } else {
    throw ConfigError("unknown figure id '" + id + "' (fig2, fig3, fig4, fig5)");
  }
  return s;
}

double campaign_cost(const ExperimentSpec& spec) {
  const double per_iter = 4.0 * static_cast<double>(spec.M) * static_cast<double>(spec.N);
  const double runs = static_cast<double>(spec.sweep.size()) * static_cast<double>(spec.trials);
  const double lp = 50.0 * static_cast<double>(spec.M) * static_cast<double>(spec.M) *
                    static_cast<double>(spec.N) * static_cast<double>(spec.trials);
  return per_iter * static_cast<double>(spec.flow.max_iters) * runs + lp;
}

}  // namespace wnlab
