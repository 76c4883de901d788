#include "wnlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "wnlab/errors.hpp"

namespace wnlab {

namespace {

void check_depth2(int depth) {
  if (depth < 2) throw DomainError("bounds require L >= 2, got " + std::to_string(depth));
}

double log_c_L(int depth) {
  if (depth == 2) return 0.0;
  return depth / (depth - 2.0) * std::log(depth / 2.0);
}

}  // namespace

double c_L(int depth) {
  check_depth2(depth);
  if (depth == 2) return 1.0;
  return std::pow(depth / 2.0, depth / (depth - 2.0));
}

Vec theorem_weights(const Vec& xtilde0, int depth) {
  check_depth2(depth);
  if (!all_positive(xtilde0)) throw DomainError("x~(0) must be strictly positive");
  if (depth == 2) return Vec::Ones(xtilde0.size());
  return hadamard_rpow(xtilde0, 2.0 / depth - 1.0);
}

BetaStats beta_stats(const Vec& xtilde0, int depth) {
  const Vec w = theorem_weights(xtilde0, depth);
  const Vec wx = w.cwiseProduct(xtilde0);
  return BetaStats{wx.sum(), wx.minCoeff()};
}

bool epsilon_precondition(double beta1, double Q, int depth, double log_rho) {
  check_depth2(depth);
  if (!(beta1 > 0.0) || !(Q > 0.0)) return false;
  return std::log(Q) > log_c_L(depth) + (2.0 / depth) * (std::log(beta1) - depth * log_rho);
}

double epsilon_bound_magnified(double beta1, double beta_min, double Q, int depth, double log_rho) {
  check_depth2(depth);
  if (!(beta1 > 0.0) || !(beta_min > 0.0)) throw DomainError("beta1 and beta_min must be positive");
  if (beta_min > beta1 * (1.0 + 1e-12)) throw DomainError("beta_min must not exceed beta1");
  if (!epsilon_precondition(beta1, Q, depth, log_rho)) {
    throw PreconditionError("epsilon requires Q > c_L*beta1^(2/L): Q = " + std::to_string(Q) +
                            ", c_L*beta1^(2/L) = " +
                            std::to_string(std::exp(log_c_L(depth) +
                                                    (2.0 / depth) * (std::log(beta1) - depth * log_rho))));
  }
  const double lb1 = std::log(beta1) - depth * log_rho;
  const double lbm = std::log(beta_min) - depth * log_rho;
  if (depth == 2) return (lb1 - lbm) / (std::log(Q) - lb1);
  const double g = 1.0 - 2.0 / depth;
  const double num = depth * (std::exp(g * lb1) - std::exp(g * lbm));
  const double den = 2.0 * std::pow(Q, g) - depth * std::exp(g * lb1);
  return num / den;
}

double epsilon_bound(double beta1, double beta_min, double Q, int depth) {
  return epsilon_bound_magnified(beta1, beta_min, Q, depth, 0.0);
}

double log_rho_from_norm(double r0, double eta_ratio, double pinv_b_norm, int depth) {
  if (depth < 1) throw DomainError("depth must be >= 1");
  if (!(r0 > 0.0)) throw DomainError("rho: r0 must be positive");
  if (!(eta_ratio > 0.0)) throw DomainError("rho: eta_ratio must be positive");
  if (!(pinv_b_norm > 0.0)) throw DomainError("rho: requires b != 0");
  const double n2L = std::pow(pinv_b_norm, 2.0 / depth);
  return std::log(r0) - std::log(pinv_b_norm) / depth + (n2L - r0 * r0) / (2.0 * eta_ratio);
}

double rho_from_norm(double r0, double eta_ratio, double pinv_b_norm, int depth) {
  const double lr = log_rho_from_norm(r0, eta_ratio, pinv_b_norm, depth);
  if (std::abs(lr) > 700.0) throw OverflowError("rho out of double range; use log_rho");
  return std::exp(lr);
}

double log_rho(double r0, double eta_ratio, const ProblemInstance& inst, const Projectors& proj,
               int depth) {
  return log_rho_from_norm(r0, eta_ratio, (proj.A_pinv * inst.b).norm(), depth);
}

double rho(double r0, double eta_ratio, const ProblemInstance& inst, const Projectors& proj, int depth) {
  return rho_from_norm(r0, eta_ratio, (proj.A_pinv * inst.b).norm(), depth);
}

BoundReport theorem_gap_check(const TrajectoryRecord& traj, double Q, const ProblemInstance& inst,
                              const Projectors& proj, double slack) {
  if (traj.terminal.reason != TerminalReason::LossTol) {
    throw NotApplicableError("trajectory did not reach the loss tolerance (" +
                             to_string(traj.terminal.reason) + ")");
  }
  if (traj.variant == Variant::Signed) throw NotApplicableError("bounds cover nonnegative runs only");

  BoundReport rep;
  rep.depth = traj.depth;
  rep.c_L = c_L(traj.depth);
  rep.Q = Q;
  const FlowState& s0 = traj.initial().state;
  const Vec xt0 = effective_xtilde(s0, traj.depth);
  const BetaStats bs = beta_stats(xt0, traj.depth);
  rep.beta1 = bs.beta1;
  rep.beta_min = bs.beta_min;
  rep.pinv_b_norm = (proj.A_pinv * inst.b).norm();

  const Vec w = theorem_weights(xt0, traj.depth);
  rep.weighted_l1 = w.dot(traj.terminal.final_xtilde.cwiseAbs());
  rep.achieved_gap = rep.weighted_l1 - Q;

  const FlowState& sf = traj.final().state;
  if (const auto* p = std::get_if<PolarState>(&sf)) {
    rep.r_inf = p->r;
  } else {
    rep.r_inf = effective_x(sf).norm();
  }

  if (traj.variant == Variant::WnConstant) {
    const double r0 = std::get<PolarState>(s0).r;
    rep.log_rho = log_rho_from_norm(r0, traj.eta_ratio, rep.pinv_b_norm, traj.depth);
    const double limit = std::min(std::sqrt(traj.eta_ratio), std::pow(rep.pinv_b_norm, 1.0 / traj.depth));
    rep.inside_hypotheses = r0 <= limit * (1.0 + 1e-12);
  }
  if (std::abs(rep.log_rho) <= 700.0) rep.rho = std::exp(rep.log_rho);

  rep.precondition_ok = epsilon_precondition(rep.beta1, Q, traj.depth, rep.log_rho);
  if (rep.precondition_ok) {
    rep.epsilon = epsilon_bound_magnified(rep.beta1, rep.beta_min, Q, traj.depth, rep.log_rho);
    rep.bound_satisfied = rep.achieved_gap <= *rep.epsilon * Q + slack * std::max(1.0, Q);
  } else {
    rep.note = "hypotheses not met: Q <= c_L*beta1^(2/L)";
  }
  if (!rep.inside_hypotheses) {
    rep.note += rep.note.empty() ? "" : "; ";
    rep.note += "r0 outside min(sqrt(eta), |A^+b|^(1/L))";
  }
  return rep;
}

RateCertificate rate_certificate(const TrajectoryRecord& traj, const ProblemInstance& inst,
                                 const std::vector<Eigen::Index>& support, std::size_t window_begin,
                                 std::optional<std::size_t> window_end) {
  if (traj.variant == Variant::Signed) throw NotApplicableError("no rate certificate for the signed variant");
  if (support.empty()) throw NotApplicableError("empty support");
  const auto& snaps = traj.snapshots;
  const std::size_t end = window_end.value_or(snaps.size() - 1);
  if (window_begin > end || end >= snaps.size()) throw ConfigError("invalid snapshot window");

  RateCertificate cert;
  cert.support = support;
  cert.window_begin = window_begin;
  cert.window_end = end;
  cert.t0 = snaps[window_begin].t;

  const Eigen::Index m = inst.rows();
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k >= m) {
    Mat AI(m, k);
    for (Eigen::Index j = 0; j < k; ++j) AI.col(j) = inst.A.col(support[j]);
    Eigen::JacobiSVD<Mat> svd(AI);
    cert.sigma_min = svd.singularValues()[m - 1];
  }

  double cx = std::numeric_limits<double>::infinity();
  for (std::size_t i = window_begin; i <= end; ++i) {
    const Vec x = effective_x(snaps[i].state);
    for (Eigen::Index n : support) cx = std::min(cx, std::abs(x[n]));
  }
  if (!(cx > 0.0)) throw NotApplicableError("a support coordinate reaches zero in the window");
  cert.c_x = cx;

  const double Ic2 = static_cast<double>(k) * cx * cx;
  double factor = 1.0;
  switch (traj.variant) {
    case Variant::Plain:
      cert.c_r = 0.0;
      cert.c_u = 0.0;
      factor = 1.0;
      break;
    case Variant::WnConstant:
      cert.c_r = traj.eta_ratio;
      cert.c_u = 1.0;
      factor = std::min(cert.c_r, cert.c_u * Ic2);
      break;
    case Variant::WnDynamic:
      cert.c_r = Ic2;
      cert.c_u = 1.0;
      factor = std::min(cert.c_r, cert.c_u * Ic2);
      break;
    case Variant::Signed:
      break;
  }
  cert.predicted_rate = factor * 2.0 * traj.depth * std::pow(cx, 2 * traj.depth - 2) *
                        cert.sigma_min * cert.sigma_min;
  return cert;
}

bool rate_check(const TrajectoryRecord& traj, const RateCertificate& cert) {
  const auto& snaps = traj.snapshots;
  const double l0 = snaps[cert.window_begin].loss;
  for (std::size_t i = cert.window_begin; i <= cert.window_end; ++i) {
    const double bound = l0 * std::exp(-cert.predicted_rate * (snaps[i].t - cert.t0));
    if (snaps[i].loss > bound * (1.0 + 1e-9) + std::numeric_limits<double>::min()) return false;
  }
  return true;
}

LogLossFit fit_log_loss(const std::vector<double>& t, const std::vector<double>& loss) {
  LogLossFit fit;
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  const std::size_t n = std::min(t.size(), loss.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!(loss[i] > 0.0)) continue;
    const double y = std::log(loss[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
    syy += y * y;
    ++fit.points;
  }
  if (fit.points < 3) return fit;
  const double k = static_cast<double>(fit.points);
  const double vt = stt - st * st / k;
  const double vy = syy - sy * sy / k;
  const double cty = sty - st * sy / k;
  if (!(vt > 0.0)) return fit;
  fit.slope = cty / vt;
  fit.intercept = (sy - fit.slope * st) / k;
  fit.r2 = vy > 0.0 ? (cty * cty) / (vt * vy) : 1.0;
  return fit;
}

LogLossFit fit_log_loss_post_transient(const TrajectoryRecord& traj, double drop) {
  const auto& lh = traj.loss_history;
  const auto& th = traj.time_history;
  if (lh.empty()) return {};
  std::size_t start = 0;
  while (start < lh.size() && lh[start] > drop * lh.front()) ++start;
  return fit_log_loss(std::vector<double>(th.begin() + static_cast<long>(start), th.end()),
                      std::vector<double>(lh.begin() + static_cast<long>(start), lh.end()));
}

double kernel_orthant_probability(long N, long K) {
  if (N < 1) throw DomainError("N must be >= 1");
  if (K < 1 || K > N) throw DomainError("K must satisfy 1 <= K <= N");
  if (K == N) return 1.0;
  const long n = N - 1;
  if (n <= 63) {
    using u128 = unsigned __int128;
    std::uint64_t c = 1, sum = 0;
    for (long i = 0; i < K; ++i) {
      sum += c;
      c = static_cast<std::uint64_t>(static_cast<u128>(c) * static_cast<u128>(n - i) /
                                     static_cast<u128>(i + 1));
    }
    return static_cast<double>(std::ldexp(static_cast<long double>(sum), -static_cast<int>(n)));
  }
  // log-sum-exp of log C(n, i)
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(K));
  for (long i = 0; i < K; ++i) {
    terms.push_back(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0));
  }
  const double mx = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double v : terms) acc += std::exp(v - mx);
  return std::min(1.0, std::exp(mx + std::log(acc) - n * std::log(2.0)));
}

}  // namespace wnlab
