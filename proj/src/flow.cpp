#include "wnlab/flow.hpp"

#include <algorithm>
#include <cmath>

#include "wnlab/errors.hpp"
#include "wnlab/rng.hpp"

namespace wnlab {

namespace {

constexpr double kMinLineSearchStep = 1e-18;

// Loss and whichever gradients the variant's update needs, from one residual.
struct Eval {
  double loss = 0.0;
  Vec g;         // ∇L(x) for Plain / reduced WnDynamic; ∇₊ for Signed
  Vec g2;        // ∇₋ for Signed
  double gr = 0.0;
  Vec gu;        // WN partials
};

bool uses_polar_grads(const FlowConfig& c) {
  return c.variant == Variant::WnConstant ||
         (c.variant == Variant::WnDynamic && c.dynamic_path == DynamicPath::Polar);
}

Eval evaluate(const FlowState& state, const ProblemInstance& inst, const FlowConfig& c) {
  Eval ev;
  switch (c.variant) {
    case Variant::Plain: {
      LossGrad lg = loss_and_grad(std::get<DenseState>(state).x, inst, c.depth);
      ev.loss = lg.loss;
      ev.g = std::move(lg.grad);
      break;
    }
    case Variant::WnConstant:
    case Variant::WnDynamic: {
      const auto& s = std::get<PolarState>(state);
      if (uses_polar_grads(c)) {
        WnGrads g = wn_loss_and_grads(s, inst, c.depth, &ev.loss);
        ev.gr = g.dr;
        ev.gu = std::move(g.du);
      } else {
        LossGrad lg = loss_and_grad(s.effective(), inst, c.depth);
        ev.loss = lg.loss;
        ev.g = std::move(lg.grad);
      }
      break;
    }
    case Variant::Signed: {
      SignedLossGrads sg = signed_loss_and_grads(std::get<SignedState>(state), inst, c.depth);
      ev.loss = sg.loss;
      ev.g = std::move(sg.d_plus);
      ev.g2 = std::move(sg.d_minus);
      break;
    }
  }
  return ev;
}

double state_loss(const FlowState& state, const ProblemInstance& inst, int depth) {
  if (const auto* s = std::get_if<SignedState>(&state)) {
    const Vec res = inst.A * (hadamard_pow(s->u_plus, depth) - hadamard_pow(s->u_minus, depth)) - inst.b;
    return res.squaredNorm() / (2.0 * depth);
  }
  return loss(effective_x(state), inst, depth);
}

PolarState normalize_polar(double r, Vec u, bool renormalize) {
  if (renormalize) u /= u.norm();
  return PolarState{r, std::move(u)};
}

PolarState polar_from_x(const Vec& x) {
  const double n = x.norm();
  return PolarState{n, x / n};
}

// Update with flow time h using cached gradients.
FlowState propose(const FlowState& state, const Eval& ev, const FlowConfig& c, double h) {
  switch (c.variant) {
    case Variant::Plain:
      return DenseState{std::get<DenseState>(state).x - h * ev.g};
    case Variant::WnConstant: {
      const auto& s = std::get<PolarState>(state);
      return normalize_polar(s.r - h * c.eta_ratio * ev.gr, s.u - (h * c.direction_rate) * ev.gu,
                             c.renormalize);
    }
    case Variant::WnDynamic: {
      const auto& s = std::get<PolarState>(state);
      if (c.dynamic_path == DynamicPath::Polar) {
        return normalize_polar(s.r - h * s.r * s.r * ev.gr, s.u - h * ev.gu, c.renormalize);
      }
      const Vec x = s.effective();
      return polar_from_x(x - (h * x.squaredNorm()) * ev.g);
    }
    case Variant::Signed: {
      const auto& s = std::get<SignedState>(state);
      return SignedState{s.u_plus - h * ev.g, s.u_minus - h * ev.g2};
    }
  }
  return state;
}

// ⟨g, Dg⟩: first-order loss decrease per unit flow time.
double rate_metric(const FlowState& state, const Eval& ev, const FlowConfig& c) {
  switch (c.variant) {
    case Variant::Plain:
      return ev.g.squaredNorm();
    case Variant::WnConstant:
      return c.eta_ratio * ev.gr * ev.gr + c.direction_rate * ev.gu.squaredNorm();
    case Variant::WnDynamic: {
      const auto& s = std::get<PolarState>(state);
      if (c.dynamic_path == DynamicPath::Polar) return s.r * s.r * ev.gr * ev.gr + ev.gu.squaredNorm();
      return s.effective().squaredNorm() * ev.g.squaredNorm();
    }
    case Variant::Signed:
      return ev.g.squaredNorm() + ev.g2.squaredNorm();
  }
  return 0.0;
}

// Flow time covered by a fixed parameter-space step h. For WnDynamic the
// rate ‖x‖² is divided out so the iterates match plain GD step for step.
double fixed_dt(const FlowState& state, const FlowConfig& c, double h) {
  if (c.variant != Variant::WnDynamic) return h;
  const auto& s = std::get<PolarState>(state);
  if (c.dynamic_path == DynamicPath::Polar) return h / (s.r * s.r);
  return h / s.effective().squaredNorm();
}

bool state_finite(const FlowState& state) {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseState>) {
          return s.x.allFinite();
        } else if constexpr (std::is_same_v<T, PolarState>) {
          return std::isfinite(s.r) && s.u.allFinite();
        } else {
          return s.u_plus.allFinite() && s.u_minus.allFinite();
        }
      },
      state);
}

bool state_positive(const FlowState& state) {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseState>) {
          return all_positive(s.x);
        } else if constexpr (std::is_same_v<T, PolarState>) {
          return s.r > 0.0 && all_positive(s.u);
        } else {
          return all_positive(s.u_plus) && all_positive(s.u_minus);
        }
      },
      state);
}

double state_scale(const FlowState& state) {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseState>) {
          return s.x.norm();
        } else if constexpr (std::is_same_v<T, PolarState>) {
          return std::abs(s.r);
        } else {
          return std::sqrt(s.u_plus.squaredNorm() + s.u_minus.squaredNorm());
        }
      },
      state);
}

LineSearchResult search(const FlowState& state, const Eval& ev, const ProblemInstance& inst,
                        const FlowConfig& c, const LineSearch& ls) {
  LineSearchResult out{state, 0.0, 0.0, ev.loss, ev.loss, false};
  const double metric = rate_metric(state, ev, c);
  if (!(metric > 0.0)) {
    out.stalled = true;
    return out;
  }
  for (double h = ls.initial_step; h >= kMinLineSearchStep; h *= ls.shrink) {
    FlowState trial = propose(state, ev, c, h);
    if (!state_finite(trial)) continue;
    double trial_loss = 0.0;
    try {
      trial_loss = state_loss(trial, inst, c.depth);
    } catch (const SingularStateError&) {
      continue;
    }
    if (std::isfinite(trial_loss) && trial_loss <= ev.loss - ls.armijo_c * h * metric) {
      out.state = std::move(trial);
      out.h_used = h;
      out.dt = h;
      out.loss_after = trial_loss;
      return out;
    }
  }
  out.stalled = true;
  return out;
}

void check_step(double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size must be positive and finite");
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Plain: return "plain";
    case Variant::WnConstant: return "wn-constant";
    case Variant::WnDynamic: return "wn-dynamic";
    case Variant::Signed: return "signed";
  }
  return "?";
}

Variant parse_variant(const std::string& s) {
  if (s == "plain") return Variant::Plain;
  if (s == "wn-constant" || s == "wn") return Variant::WnConstant;
  if (s == "wn-dynamic") return Variant::WnDynamic;
  if (s == "signed") return Variant::Signed;
  throw ConfigError("unknown variant '" + s + "' (plain, wn-constant, wn-dynamic, signed)");
}

std::string to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::LossTol: return "LossTol";
    case TerminalReason::MaxIters: return "MaxIters";
    case TerminalReason::Diverged: return "Diverged";
    case TerminalReason::Stalled: return "Stalled";
    case TerminalReason::PositivityViolation: return "PositivityViolation";
  }
  return "?";
}

TerminalReason parse_terminal_reason(const std::string& s) {
  for (auto r : {TerminalReason::LossTol, TerminalReason::MaxIters, TerminalReason::Diverged,
                 TerminalReason::Stalled, TerminalReason::PositivityViolation}) {
    if (to_string(r) == s) return r;
  }
  throw ParseError("unknown terminal reason '" + s + "'");
}

InitSpec InitSpec::explicit_vector(Vec x0) {
  InitSpec s;
  s.mode = Mode::ExplicitVector;
  s.x0 = std::move(x0);
  return s;
}

InitSpec InitSpec::polar(double r0, Vec u0) {
  InitSpec s;
  s.mode = Mode::PolarExplicit;
  s.r0 = r0;
  s.u0 = std::move(u0);
  return s;
}

InitSpec InitSpec::random_positive(double r0, std::uint64_t seed) {
  InitSpec s;
  s.mode = Mode::RandomPositive;
  s.r0 = r0;
  s.seed = seed;
  return s;
}

void FlowConfig::validate() const {
  if (depth < 1) throw ConfigError("depth must be >= 1");
  if (variant == Variant::Signed && depth < 2) throw ConfigError("the signed variant requires depth >= 2");
  if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(loss_tol > 0.0)) throw ConfigError("loss_tol must be positive");
  if (snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
  if (variant == Variant::WnConstant && !(eta_ratio > 0.0)) throw ConfigError("eta_ratio must be positive");
  if (!(direction_rate > 0.0)) throw ConfigError("direction_rate must be positive");
  if (const auto* ls = std::get_if<LineSearch>(&step)) {
    if (!(ls->shrink > 0.0 && ls->shrink < 1.0)) throw ConfigError("line-search shrink must lie in (0,1)");
    if (!(ls->armijo_c > 0.0 && ls->armijo_c < 1.0)) throw ConfigError("armijo_c must lie in (0,1)");
    if (!(ls->initial_step > 0.0)) throw ConfigError("line-search initial step must be positive");
  }
  if (init.mode != InitSpec::Mode::ExplicitVector && !(init.r0 > 0.0)) {
    throw ConfigError("r0 must be positive");
  }
  if (init.mode == InitSpec::Mode::PolarExplicit && nonnegative && !all_positive(init.u0)) {
    throw ConfigError("u0 must be strictly positive in nonnegative mode");
  }
}

Vec effective_x(const FlowState& s) {
  if (const auto* d = std::get_if<DenseState>(&s)) return d->x;
  if (const auto* p = std::get_if<PolarState>(&s)) return p->effective();
  throw ConfigError("signed states have no single effective parameter vector");
}

Vec effective_xtilde(const FlowState& s, int depth) {
  if (const auto* g = std::get_if<SignedState>(&s)) {
    return hadamard_pow(g->u_plus, depth) - hadamard_pow(g->u_minus, depth);
  }
  return hadamard_pow(effective_x(s), depth);
}

Vec step_plain(const Vec& x, const ProblemInstance& inst, int depth, double h) {
  check_step(h);
  return x - h * grad_loss(x, inst, depth);
}

PolarState step_wn_constant(const PolarState& s, const ProblemInstance& inst, int depth,
                            double eta_ratio, double h, bool renormalize, double direction_rate) {
  check_step(h);
  if (!(eta_ratio > 0.0)) throw ConfigError("eta_ratio must be positive");
  const WnGrads g = wn_grads(s, inst, depth);
  return normalize_polar(s.r - h * eta_ratio * g.dr, s.u - (h * direction_rate) * g.du, renormalize);
}

PolarState step_wn_dynamic(const PolarState& s, const ProblemInstance& inst, int depth, double h,
                           DynamicPath path, bool renormalize) {
  check_step(h);
  if (path == DynamicPath::Polar) {
    const WnGrads g = wn_grads(s, inst, depth);
    return normalize_polar(s.r - h * s.r * s.r * g.dr, s.u - h * g.du, renormalize);
  }
  const Vec x = s.effective();
  return polar_from_x(x - (h * x.squaredNorm()) * grad_loss(x, inst, depth));
}

SignedState step_signed(const SignedState& s, const ProblemInstance& inst, int depth, double h) {
  check_step(h);
  const SignedLossGrads g = signed_loss_and_grads(s, inst, depth);
  return SignedState{s.u_plus - h * g.d_plus, s.u_minus - h * g.d_minus};
}

LineSearchResult line_search_step(const FlowState& state, const ProblemInstance& inst,
                                  const FlowConfig& config, const LineSearch& ls) {
  const Eval ev = evaluate(state, inst, config);
  return search(state, ev, inst, config, ls);
}

double default_step(const ProblemInstance& inst, const FlowConfig& config, double r0) {
  const double a2 = std::pow(spectral_norm(inst.A), 2);
  double h = 0.01 * std::min(1.0, 1.0 / a2);
  if (config.depth > 2) h *= std::ldexp(1.0, -(config.depth - 2));
  double scale = std::max(1.0, r0 * r0);
  if (config.variant == Variant::WnConstant) scale = std::max(scale, config.eta_ratio);
  return h / scale;
}

FlowState initial_state(const FlowConfig& c, Eigen::Index n) {
  const Eigen::Index len = c.variant == Variant::Signed ? 2 * n : n;
  Vec v;
  switch (c.init.mode) {
    case InitSpec::Mode::ExplicitVector:
      v = c.init.x0;
      break;
    case InitSpec::Mode::PolarExplicit:
      v = c.init.u0;
      break;
    case InitSpec::Mode::RandomPositive: {
      Rng rng(c.init.seed);
      v = rng.normal_vec(len).cwiseAbs();
      v /= v.norm();
      break;
    }
  }
  require_size(v, len, "initial vector");
  if (v.norm() == 0.0) throw SingularStateError("initial vector is zero");

  switch (c.variant) {
    case Variant::Plain:
      if (c.init.mode == InitSpec::Mode::ExplicitVector) return DenseState{v};
      return DenseState{(c.init.r0 / v.norm()) * v};
    case Variant::WnConstant:
    case Variant::WnDynamic:
      if (c.init.mode == InitSpec::Mode::ExplicitVector) return polar_from_x(v);
      return PolarState{c.init.r0, v};
    case Variant::Signed: {
      if (c.init.mode != InitSpec::Mode::ExplicitVector) v *= c.init.r0 / v.norm();
      return SignedState{v.head(n), v.tail(n)};
    }
  }
  return DenseState{v};
}

TrajectoryRecord integrate(const FlowConfig& config, const ProblemInstance& inst) {
  config.validate();
  inst.validate();

  TrajectoryRecord rec;
  rec.variant = config.variant;
  rec.depth = config.depth;
  rec.eta_ratio = config.variant == Variant::WnConstant ? config.eta_ratio : 0.0;

  FlowState state = initial_state(config, inst.cols());
  const auto* fixed = std::get_if<FixedStep>(&config.step);
  const auto* ls = std::get_if<LineSearch>(&config.step);
  if (fixed) {
    rec.step_h = fixed->h > 0.0 ? fixed->h : default_step(inst, config, state_scale(state));
  }

  double t = 0.0;
  long k = 0;
  bool halt = false;
  bool state_good = true;  // `state` is the last successfully evaluated iterate
  long last_snapshot = -1;
  double last_loss = 0.0;
  TerminalReason reason = TerminalReason::MaxIters;

  for (;; ++k) {
    Eval ev;
    try {
      ev = evaluate(state, inst, config);
    } catch (const SingularStateError&) {
      reason = TerminalReason::Diverged;
      state_good = false;
      break;
    }
    if (!std::isfinite(ev.loss)) {
      reason = TerminalReason::Diverged;
      state_good = false;
      break;
    }
    last_loss = ev.loss;
    if (config.record_history) {
      rec.loss_history.push_back(ev.loss);
      rec.time_history.push_back(t);
    }
    if (k % config.snapshot_stride == 0) {
      rec.snapshots.push_back(Snapshot{k, t, ev.loss, state});
      last_snapshot = k;
    }
    if (ev.loss <= config.loss_tol) {
      reason = TerminalReason::LossTol;
      break;
    }
    if (halt) {
      reason = TerminalReason::PositivityViolation;
      break;
    }
    if (k >= config.max_iters) {
      reason = TerminalReason::MaxIters;
      break;
    }
    if (config.cancel && (k & 1023) == 0 && config.cancel->load(std::memory_order_relaxed)) {
      rec.cancelled = true;
      break;
    }

    FlowState next;
    double dt = 0.0;
    if (fixed) {
      dt = fixed_dt(state, config, rec.step_h);
      next = propose(state, ev, config, dt);
    } else {
      LineSearchResult r = search(state, ev, inst, config, *ls);
      if (r.stalled) {
        reason = TerminalReason::Stalled;
        break;
      }
      next = std::move(r.state);
      dt = r.dt;
    }
    if (!state_finite(next)) {
      reason = TerminalReason::Diverged;
      break;
    }
    state = std::move(next);
    t += dt;
    if (config.nonnegative && !state_positive(state)) {
      ++rec.positivity_violations;
      if (rec.first_violation_iter < 0) rec.first_violation_iter = k + 1;
      if (config.positivity == PositivityPolicy::Halt) halt = true;
    }
  }

  if (state_good && last_snapshot != k) {
    rec.snapshots.push_back(Snapshot{k, t, last_loss, state});
  }
  if (rec.snapshots.empty()) rec.snapshots.push_back(Snapshot{k, t, last_loss, state});

  Terminal& term = rec.terminal;
  term.reason = reason;
  term.iters = k;
  term.t = t;
  term.final_loss = reason == TerminalReason::Diverged ? std::nan("") : last_loss;
  const FlowState& final_state = rec.snapshots.back().state;
  if (config.variant != Variant::Signed) term.final_effective_x = effective_x(final_state);
  term.final_xtilde = effective_xtilde(final_state, config.depth);
  return rec;
}

}  // namespace wnlab
