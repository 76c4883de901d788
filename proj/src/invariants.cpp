#include "wnlab/invariants.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wnlab/errors.hpp"

namespace wnlab {

namespace {

constexpr double kMaxExp = 700.0;

Vec log_positive(const Vec& x, const char* what) {
  if (!all_positive(x)) throw DomainError(std::string(what) + " must be strictly positive");
  return x.array().log().matrix();
}

Vec pow_positive(const Vec& x, int p, const char* what) {
  if (!all_positive(x)) throw DomainError(std::string(what) + " must be strictly positive");
  return hadamard_pow(x, p);
}

double checked_exp(double e, const char* what) {
  if (std::abs(e) > kMaxExp) {
    throw OverflowError(std::string(what) + ": exponent " + std::to_string(e) +
                        " out of range; use the log-space variant");
  }
  return std::exp(e);
}

double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double min_entry(const FlowState& state) {
  return std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DenseState>) {
          return s.x.minCoeff();
        } else if constexpr (std::is_same_v<T, PolarState>) {
          return std::min(s.r, s.u.minCoeff());
        } else {
          return std::min(s.u_plus.minCoeff(), s.u_minus.minCoeff());
        }
      },
      state);
}

// Conserved vector of the variant at one snapshot; empty optional if it does not apply.
std::optional<Vec> conserved_vector(const Snapshot& snap, const TrajectoryRecord& traj,
                                    const Projectors& proj, double eta_ratio) {
  switch (traj.variant) {
    case Variant::Plain:
    case Variant::WnDynamic:
      return h0(effective_x(snap.state), proj, traj.depth);
    case Variant::WnConstant:
      return h_eta(std::get<PolarState>(snap.state), proj, traj.depth, eta_ratio);
    case Variant::Signed:
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

Vec ScaledVector::value() const { return mantissa * checked_exp(log_scale, "scaled vector"); }

Vec h0(const Vec& x, const Projectors& proj, int depth) {
  if (depth == 2) return proj.complement(log_positive(x, "x"));
  return proj.complement(pow_positive(x, 2 - depth, "x"));
}

ScaledVector h_eta_scaled(const PolarState& s, const Projectors& proj, int depth, double eta_ratio) {
  if (!(eta_ratio > 0.0)) throw DomainError("eta_ratio must be positive");
  const double nu = s.u.norm();
  if (!(nu > 0.0)) throw SingularStateError("direction vector u has zero norm");
  const Vec u = s.u / nu;
  const double e = s.r * s.r / (2.0 * eta_ratio);
  if (depth == 2) {
    return ScaledVector{proj.complement((log_positive(u, "u").array() + e).matrix()), 0.0};
  }
  return ScaledVector{proj.complement(pow_positive(u, 2 - depth, "u")), (2.0 - depth) * e};
}

Vec h_eta(const PolarState& s, const Projectors& proj, int depth, double eta_ratio) {
  const ScaledVector sv = h_eta_scaled(s, proj, depth, eta_ratio);
  if (depth == 2) return sv.mantissa;
  return sv.mantissa * checked_exp(sv.log_scale, "h_eta");
}

double log_gamma(double r0, double r, double eta_ratio) {
  if (!(r0 > 0.0)) throw DomainError("gamma: r0 must be positive");
  if (!(r > 0.0)) throw DomainError("gamma: r must be positive");
  if (!(eta_ratio > 0.0)) throw DomainError("gamma: eta_ratio must be positive");
  return std::log(r / r0) + (r0 * r0 - r * r) / (2.0 * eta_ratio);
}

double gamma(double r0, double r, double eta_ratio) {
  return checked_exp(log_gamma(r0, r, eta_ratio), "gamma");
}

std::vector<double> invariant_comparison_residual(const TrajectoryRecord& traj,
                                                  const Projectors& proj, int depth,
                                                  double eta_ratio) {
  if (traj.snapshots.empty()) return {};
  const auto& s0 = std::get<PolarState>(traj.snapshots.front().state);
  const Vec x0 = s0.effective();
  if (!all_positive(x0)) throw DomainError("initial effective vector must be positive");
  const Vec log_x0 = x0.array().log().matrix();

  std::vector<double> out;
  out.reserve(traj.snapshots.size());
  for (const Snapshot& snap : traj.snapshots) {
    const auto& s = std::get<PolarState>(snap.state);
    const Vec x = s.effective();
    const double lg = log_gamma(s0.r, s.r, eta_ratio);
    if (depth == 2) {
      const Vec d = (log_positive(x, "x").array() - log_x0.array() - lg).matrix();
      out.push_back(inf_norm(proj.complement(d)));
    } else {
      // (γ·x₀)^{2−L} = exp((2−L)(log γ + log x₀))
      const Vec ref = ((2.0 - depth) * (log_x0.array() + lg)).exp().matrix();
      if (!ref.allFinite()) throw OverflowError("comparison reference overflowed");
      out.push_back(inf_norm(proj.complement(pow_positive(x, 2 - depth, "x") - ref)));
    }
  }
  return out;
}

double bregman_F(const Vec& xtilde, int depth) {
  if (depth < 2) throw DomainError("the Bregman potential requires L >= 2");
  if (xtilde.size() && xtilde.minCoeff() < 0.0) throw DomainError("F: argument must be nonnegative");
  double f = 0.0;
  if (depth == 2) {
    for (Eigen::Index i = 0; i < xtilde.size(); ++i) {
      const double v = xtilde[i];
      f += (v > 0.0 ? v * std::log(v) : 0.0) - v;
    }
    return 0.5 * f;
  }
  const double p = 2.0 / depth;
  for (Eigen::Index i = 0; i < xtilde.size(); ++i) f += std::pow(xtilde[i], p);
  return depth / (2.0 * (2.0 - depth)) * f;
}

Vec bregman_grad(const Vec& xtilde, int depth) {
  if (depth < 2) throw DomainError("the Bregman potential requires L >= 2");
  if (!all_positive(xtilde)) throw DomainError("grad F: argument must be strictly positive");
  if (depth == 2) return 0.5 * xtilde.array().log().matrix();
  return hadamard_rpow(xtilde, 2.0 / depth - 1.0) / (2.0 - depth);
}

double bregman_div(const Vec& z, const Vec& xtilde, int depth) {
  if (depth < 2) throw DomainError("the Bregman divergence requires L >= 2");
  require_size(z, xtilde.size(), "z");
  if (!all_positive(xtilde)) throw DomainError("D_F: second argument must be strictly positive");
  if (z.size() && z.minCoeff() < 0.0) throw DomainError("D_F: first argument must be nonnegative");
  double d = 0.0;
  if (depth == 2) {
    // ½Σ[p log(p/q) − p + q]
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double p = z[i], q = xtilde[i];
      d += (p > 0.0 ? p * std::log(p / q) : 0.0) - p + q;
    }
    return 0.5 * d;
  }
  const double e = 2.0 / depth;
  const double c = depth / (2.0 * (2.0 - depth));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double p = z[i], q = xtilde[i];
    const double qe = std::pow(q, e);
    d += c * (std::pow(p, e) - qe) - (qe / q) / (2.0 - depth) * (p - q);
  }
  return d;
}

std::string conserved_quantity(Variant v) {
  switch (v) {
    case Variant::Plain:
    case Variant::WnDynamic:
      return "h0";
    case Variant::WnConstant:
      return "h_eta";
    case Variant::Signed:
      return "";
  }
  return "";
}

InvariantSnapshot invariant_snapshot(const Snapshot& snap, const TrajectoryRecord& traj,
                                     const Projectors& proj, const DriftOptions& opts) {
  InvariantSnapshot out;
  out.iter = snap.iter;
  out.t = snap.t;
  out.min_entry = min_entry(snap.state);
  const bool positive = out.min_entry > 0.0;
  if (const auto* p = std::get_if<PolarState>(&snap.state)) out.u_norm = p->u.norm();

  if (positive) {
    if (traj.variant == Variant::Plain || traj.variant == Variant::WnDynamic) {
      out.h0 = h0(effective_x(snap.state), proj, traj.depth);
    }
    if (traj.variant == Variant::WnConstant) {
      const auto& s = std::get<PolarState>(snap.state);
      try {
        out.h_eta = h_eta(s, proj, traj.depth, opts.eta_ratio);
      } catch (const OverflowError&) {
      }
      const auto& s0 = std::get<PolarState>(traj.snapshots.front().state);
      const double lg = log_gamma(s0.r, s.r, opts.eta_ratio);
      if (std::abs(lg) <= kMaxExp) out.gamma = std::exp(lg);
    }
    if (traj.variant != Variant::Signed && traj.depth >= 2) {
      const Vec xt = effective_xtilde(snap.state, traj.depth);
      for (const auto& ref : opts.references) out.bregman[ref.id] = bregman_div(ref.z, xt, traj.depth);
    }
  }
  return out;
}

std::vector<DriftReport> drift_report(const TrajectoryRecord& traj, const Projectors& proj,
                                      const DriftOptions& opts) {
  std::vector<DriftReport> reports;
  const auto& snaps = traj.snapshots;

  // Loss monotonicity over the per-iteration history.
  {
    DriftReport r;
    r.quantity = "loss_monotonicity";
    const auto& lh = traj.loss_history;
    for (std::size_t i = 1; i < lh.size(); ++i) {
      const double inc = lh[i] - lh[i - 1];
      if (inc > 0.0) {
        ++r.violations;
        r.max_violation = std::max(r.max_violation, inc);
      }
    }
    if (lh.size() < 2) {
      r.applicable = false;
      r.note = "no per-iteration loss history";
    }
    reports.push_back(r);
  }

  {
    DriftReport r;
    r.quantity = "positivity";
    r.violations = traj.positivity_violations;
    reports.push_back(r);
  }

  if (traj.variant == Variant::WnConstant || traj.variant == Variant::WnDynamic) {
    DriftReport r;
    r.quantity = "u_norm";
    const double n0 = std::get<PolarState>(snaps.front().state).u.norm();
    double prev = n0;
    for (const Snapshot& s : snaps) {
      const double n = std::get<PolarState>(s.state).u.norm();
      r.max_abs_drift = std::max(r.max_abs_drift, std::abs(n - n0));
      r.max_step_drift = std::max(r.max_step_drift, std::abs(n - prev));
      prev = n;
    }
    reports.push_back(r);
  }

  const std::string q = conserved_quantity(traj.variant);
  if (!q.empty()) {
    DriftReport r;
    r.quantity = q;
    if (snaps.size() < 2) {
      r.applicable = false;
      r.note = "fewer than two snapshots";
    } else {
      try {
        const Vec v0 = *conserved_vector(snaps.front(), traj, proj, opts.eta_ratio);
        Vec prev = v0;
        for (std::size_t i = 1; i < snaps.size(); ++i) {
          const Vec v = *conserved_vector(snaps[i], traj, proj, opts.eta_ratio);
          r.max_abs_drift = std::max(r.max_abs_drift, inf_norm(v - v0));
          r.max_step_drift = std::max(r.max_step_drift, inf_norm(v - prev));
          prev = v;
        }
      } catch (const Error& e) {
        r.applicable = false;
        r.note = e.what();
      }
    }
    reports.push_back(r);
  }

  if (traj.variant == Variant::WnConstant) {
    DriftReport r;
    r.quantity = "comparison_residual";
    try {
      for (double v : invariant_comparison_residual(traj, proj, traj.depth, opts.eta_ratio)) {
        r.max_abs_drift = std::max(r.max_abs_drift, v);
      }
    } catch (const Error& e) {
      r.applicable = false;
      r.note = e.what();
    }
    reports.push_back(r);
  }

  if (traj.variant == Variant::WnDynamic && !opts.references.empty()) {
    DriftReport r;
    r.quantity = "bregman_monotonicity";
    if (traj.depth < 2) {
      r.applicable = false;
      r.note = "requires L >= 2";
    } else {
      try {
        for (const auto& ref : opts.references) {
          double prev = std::numeric_limits<double>::infinity();
          double first = 0.0;
          for (std::size_t i = 0; i < snaps.size(); ++i) {
            const double d = bregman_div(ref.z, effective_xtilde(snaps[i].state, traj.depth), traj.depth);
            if (i == 0) first = d;
            const double inc = d - prev;
            if (inc > opts.monotonicity_tol) {
              ++r.violations;
              r.max_violation = std::max(r.max_violation, inc);
            }
            r.max_abs_drift = std::max(r.max_abs_drift, std::abs(d - first));
            prev = d;
          }
        }
      } catch (const Error& e) {
        r.applicable = false;
        r.note = e.what();
      }
    }
    reports.push_back(r);
  }
  return reports;
}

HalvingStudy step_halving_study(FlowConfig config, const ProblemInstance& inst,
                                const Projectors& proj, double h, long steps) {
  HalvingStudy out;
  out.quantity = conserved_quantity(config.variant);
  out.h = h;
  out.steps = steps;
  if (out.quantity.empty()) throw NotApplicableError("no conserved quantity for the signed variant");

  config.max_iters = steps;
  config.loss_tol = std::numeric_limits<double>::min();
  config.snapshot_stride = 1;
  config.record_history = false;
  DriftOptions opts;
  opts.eta_ratio = config.eta_ratio;

  auto measure = [&](double step, double& acc, double& per_step) {
    config.step = FixedStep{step};
    const TrajectoryRecord traj = integrate(config, inst);
    for (const DriftReport& r : drift_report(traj, proj, opts)) {
      if (r.quantity != out.quantity) continue;
      if (!r.applicable) throw NotApplicableError(r.note);
      acc = r.max_abs_drift;
      per_step = r.max_step_drift;
    }
  };
  measure(h, out.drift_h, out.step_drift_h);
  measure(0.5 * h, out.drift_half, out.step_drift_half);
  return out;
}

}  // namespace wnlab
