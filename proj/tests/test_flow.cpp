#include <gtest/gtest.h>

#include <atomic>
#include <cmath>

#include "support.hpp"
#include "wnlab/errors.hpp"
#include "wnlab/flow.hpp"

using namespace wnlab;
using wnlab::fixtures::random_instance;

namespace {

ProblemInstance scalar_instance() {
  ProblemInstance inst;
  inst.A = Mat::Constant(1, 1, 1.0);
  inst.b = Vec::Constant(1, 1.0);
  return inst;
}

Vec one(double v) { return Vec::Constant(1, v); }

FlowConfig fixed_config(Variant v, double h, long iters) {
  FlowConfig c;
  c.variant = v;
  c.step = FixedStep{h};
  c.max_iters = iters;
  c.loss_tol = 1e-300;
  c.snapshot_stride = 1;
  return c;
}

}  // namespace

TEST(StepPlain, ScalarExampleAndFixedPoint) {
  const auto inst = scalar_instance();
  EXPECT_NEAR(step_plain(one(2.0), inst, 2, 0.1)[0], 1.4, 1e-15);
  EXPECT_EQ(step_plain(one(1.0), inst, 2, 0.1)[0], 1.0);
}

TEST(StepPlain, LocalErrorIsSecondOrder) {
  Rng rng(1);
  const auto inst = random_instance(rng, 3, 6);
  const Vec x = rng.uniform_vec(6, 0.5, 2.0);
  auto defect = [&](double h) {
    const Vec full = step_plain(x, inst, 2, h);
    const Vec half = step_plain(step_plain(x, inst, 2, h / 2), inst, 2, h / 2);
    return (full - half).norm();
  };
  const double ratio = defect(1e-3) / defect(5e-4);
  EXPECT_NEAR(ratio, 4.0, 0.2);
}

TEST(StepWnConstant, FixedPointAndSphere) {
  Rng rng(2);
  const auto inst = random_instance(rng, 3, 6);
  const Vec x = inst.x_star->cwiseSqrt();
  const PolarState at{x.norm(), x / x.norm()};
  const PolarState same = step_wn_constant(at, inst, 2, 0.1, 1e-2);
  EXPECT_NEAR(same.r, at.r, 1e-14);
  EXPECT_LT((same.u - at.u).cwiseAbs().maxCoeff(), 1e-14);

  for (int trial = 0; trial < 10; ++trial) {
    const Vec u = rng.uniform_vec(6, 0.5, 2.0).normalized();
    const PolarState s{rng.uniform(0.5, 1.5), u};
    const PolarState n = step_wn_constant(s, inst, 2, 0.1, 1e-2);
    EXPECT_NEAR(n.u.norm(), 1.0, 1e-15);
    EXPECT_GE(n.u.dot(s.u), 0.0);
  }
}

TEST(StepWnConstant, RawNormDriftIsSecondOrder) {
  Rng rng(3);
  const auto inst = random_instance(rng, 3, 6);
  const PolarState s{1.0, rng.uniform_vec(6, 0.5, 2.0).normalized()};
  auto drift = [&](double h) { return std::abs(step_wn_constant(s, inst, 2, 0.1, h, false).u.norm() - 1.0); };
  EXPECT_NEAR(drift(1e-3) / drift(5e-4), 4.0, 0.1);
}

TEST(StepWnDynamic, ReducedPathScalarExample) {
  const auto inst = scalar_instance();
  const PolarState s{2.0, one(1.0)};
  const PolarState n = step_wn_dynamic(s, inst, 2, 0.01, DynamicPath::Reduced);
  EXPECT_NEAR(n.effective()[0], 1.76, 1e-14);
  const PolarState fixed = step_wn_dynamic(PolarState{1.0, one(3.0)}, inst, 2, 0.01);
  EXPECT_NEAR(fixed.effective()[0], 1.0, 1e-15);
}

TEST(StepWnDynamic, PathsAgreeToSecondOrder) {
  Rng rng(4);
  const auto inst = random_instance(rng, 3, 6);
  const PolarState s{0.8, rng.uniform_vec(6, 0.5, 2.0).normalized()};
  auto gap = [&](double h) {
    const Vec a = step_wn_dynamic(s, inst, 2, h, DynamicPath::Polar).effective();
    const Vec b = step_wn_dynamic(s, inst, 2, h, DynamicPath::Reduced).effective();
    return (a - b).norm();
  };
  EXPECT_GT(gap(1e-3), 0.0);
  EXPECT_NEAR(gap(1e-3) / gap(5e-4), 4.0, 0.3);
}

TEST(StepSigned, FixedPointAndSeparation) {
  Rng rng(5);
  auto inst = random_instance(rng, 3, 6);
  const Vec up = rng.uniform_vec(6, 0.5, 2.0), um = rng.uniform_vec(6, 0.5, 2.0);
  inst.b = inst.A * (hadamard_pow(up, 2) - hadamard_pow(um, 2));
  const SignedState same = step_signed({up, um}, inst, 2, 0.1);
  EXPECT_LT((same.u_plus - up).cwiseAbs().maxCoeff(), 1e-13);

  const SignedState sep = step_signed({up, up}, inst, 2, 0.1);
  EXPECT_GT((sep.u_plus - sep.u_minus).cwiseAbs().maxCoeff(), 1e-6);
  ProblemInstance zero_b = inst;
  zero_b.b.setZero();
  const SignedState bal = step_signed({up, up}, zero_b, 2, 0.1);
  EXPECT_EQ(bal.u_plus, bal.u_minus);
}

TEST(StepSigned, DecreaseMatchesGradientNorm) {
  Rng rng(6);
  const auto inst = random_instance(rng, 4, 7, 3);
  const SignedState s{rng.uniform_vec(7, 0.5, 1.0), rng.uniform_vec(7, 0.5, 1.0)};
  const SignedLossGrads g = signed_loss_and_grads(s, inst, 3);
  const double h = 1e-7;
  const double drop = g.loss - signed_loss_and_grads(step_signed(s, inst, 3, h), inst, 3).loss;
  const double predicted = h * (g.d_plus.squaredNorm() + g.d_minus.squaredNorm());
  EXPECT_NEAR(drop / predicted, 1.0, 1e-4);
}

TEST(LineSearch, QuadraticBowlAcceptsUnitStep) {
  const auto inst = scalar_instance();
  FlowConfig c;
  c.depth = 1;
  for (double armijo : {0.1, 0.5}) {
    const LineSearchResult r = line_search_step(DenseState{one(3.0)}, inst, c, LineSearch{0.5, armijo, 1.0});
    EXPECT_DOUBLE_EQ(r.h_used, 1.0);
    EXPECT_FALSE(r.stalled);
    EXPECT_NEAR(r.loss_after, 0.0, 1e-30);
  }
}

TEST(LineSearch, ZeroGradientStalls) {
  const auto inst = scalar_instance();
  FlowConfig c;
  const LineSearchResult r = line_search_step(DenseState{one(1.0)}, inst, c, LineSearch{});
  EXPECT_TRUE(r.stalled);
}

TEST(LineSearch, LossNonIncreasingEveryVariant) {
  Rng rng(7);
  for (Variant v : {Variant::Plain, Variant::WnConstant, Variant::WnDynamic, Variant::Signed}) {
    for (int trial = 0; trial < 3; ++trial) {
      const auto inst = random_instance(rng, 4, 8);
      FlowConfig c;
      c.variant = v;
      c.step = LineSearch{};
      c.max_iters = 400;
      c.init = InitSpec::random_positive(1.0, static_cast<std::uint64_t>(trial));
      const TrajectoryRecord traj = integrate(c, inst);
      for (std::size_t k = 1; k < traj.loss_history.size(); ++k) {
        ASSERT_LE(traj.loss_history[k], traj.loss_history[k - 1]) << to_string(v) << " iter " << k;
      }
      EXPECT_LT(traj.loss_history.back(), traj.loss_history.front());
    }
  }
}

TEST(Integrate, InterpolatingStartStopsImmediately) {
  Rng rng(8);
  const auto inst = random_instance(rng, 3, 5);
  FlowConfig c;
  c.init = InitSpec::explicit_vector(inst.x_star->cwiseSqrt());
  const TrajectoryRecord traj = integrate(c, inst);
  EXPECT_EQ(traj.terminal.reason, TerminalReason::LossTol);
  EXPECT_EQ(traj.terminal.iters, 0);
  EXPECT_EQ(traj.snapshots.size(), 1u);
}

TEST(Integrate, ReachesLossTolOnSmallInstance) {
  Rng rng(9);
  const auto inst = random_instance(rng, 2, 4);
  for (Variant v : {Variant::Plain, Variant::WnConstant, Variant::WnDynamic, Variant::Signed}) {
    FlowConfig c;
    c.variant = v;
    c.eta_ratio = 0.5;
    c.step = FixedStep{0.02};
    c.max_iters = 400000;
    c.init = InitSpec::random_positive(1.0, 1);
    const TrajectoryRecord traj = integrate(c, inst);
    EXPECT_EQ(traj.terminal.reason, TerminalReason::LossTol) << to_string(v);
    EXPECT_LE(traj.terminal.final_loss, 1e-12);
    EXPECT_EQ(traj.positivity_violations, 0);
    for (std::size_t k = 1; k < traj.snapshots.size(); ++k) {
      EXPECT_GT(traj.snapshots[k].iter, traj.snapshots[k - 1].iter);
    }
    EXPECT_EQ(traj.terminal.final_xtilde, effective_xtilde(traj.final().state, c.depth));
  }
}

TEST(Integrate, DivergenceIsReported) {
  Rng rng(10);
  const auto inst = random_instance(rng, 3, 5);
  FlowConfig c = fixed_config(Variant::Plain, 50.0, 1000);
  c.init = InitSpec::random_positive(2.0, 3);
  EXPECT_EQ(integrate(c, inst).terminal.reason, TerminalReason::Diverged);
}

TEST(Integrate, PositivityViolationSignalledOrHalted) {
  const auto inst = scalar_instance();
  FlowConfig c = fixed_config(Variant::Plain, 1.0, 3);
  c.init = InitSpec::explicit_vector(one(2.0));
  const TrajectoryRecord cont = integrate(c, inst);
  EXPECT_GT(cont.positivity_violations, 0);
  EXPECT_EQ(cont.first_violation_iter, 1);
  EXPECT_NE(cont.terminal.reason, TerminalReason::PositivityViolation);

  c.positivity = PositivityPolicy::Halt;
  EXPECT_EQ(integrate(c, inst).terminal.reason, TerminalReason::PositivityViolation);
}

TEST(Integrate, CancelFlagStopsEarly) {
  Rng rng(11);
  const auto inst = random_instance(rng, 3, 5);
  std::atomic<bool> cancel{true};
  FlowConfig c = fixed_config(Variant::Plain, 1e-4, 100000);
  c.cancel = &cancel;
  const TrajectoryRecord traj = integrate(c, inst);
  EXPECT_TRUE(traj.cancelled);
  EXPECT_LT(traj.terminal.iters, 100000);
}

TEST(Integrate, RandomPositiveInitIsUnitAndPositive) {
  FlowConfig c;
  c.variant = Variant::WnConstant;
  c.init = InitSpec::random_positive(0.3, 77);
  const auto s = std::get<PolarState>(initial_state(c, 50));
  EXPECT_NEAR(s.u.norm(), 1.0, 1e-15);
  EXPECT_GT(s.u.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(s.r, 0.3);
  c.variant = Variant::Plain;
  const auto d = std::get<DenseState>(initial_state(c, 50));
  EXPECT_LT((d.x - 0.3 * s.u).cwiseAbs().maxCoeff(), 1e-16);
}

TEST(Integrate, DefaultStep) {
  ProblemInstance inst;
  inst.A = 2.0 * Mat::Identity(2, 2);
  inst.b = Vec::Ones(2);
  FlowConfig c;
  EXPECT_DOUBLE_EQ(default_step(inst, c, 1.0), 0.0025);
  c.depth = 4;
  EXPECT_DOUBLE_EQ(default_step(inst, c, 1.0), 0.0025 / 4);
  c.depth = 2;
  EXPECT_DOUBLE_EQ(default_step(inst, c, 10.0), 0.0025 / 100);
}

TEST(Integrate, ConfigValidation) {
  FlowConfig c;
  c.max_iters = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = FlowConfig{};
  c.variant = Variant::WnConstant;
  c.eta_ratio = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = FlowConfig{};
  c.step = LineSearch{1.5, 1e-4, 1.0};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(parse_variant("wn-sideways"), ConfigError);
  EXPECT_EQ(parse_variant("wn"), Variant::WnConstant);
}

TEST(Integrate, DynamicRateMatchesPlainTerminalState) {
  Rng rng(12);
  for (int trial = 0; trial < 3; ++trial) {
    const auto inst = random_instance(rng, 3, 7);
    FlowConfig c;
    c.step = FixedStep{0.01};
    c.max_iters = 2000000;
    c.init = InitSpec::random_positive(0.5, static_cast<std::uint64_t>(trial));
    const TrajectoryRecord plain = integrate(c, inst);
    c.variant = Variant::WnDynamic;
    const TrajectoryRecord dyn = integrate(c, inst);
    ASSERT_EQ(plain.terminal.reason, TerminalReason::LossTol);
    ASSERT_EQ(dyn.terminal.reason, TerminalReason::LossTol);
    EXPECT_LT((plain.terminal.final_xtilde - dyn.terminal.final_xtilde).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Integrate, DirectionRescalingReproducesTrajectory) {
  Rng rng(13);
  const auto inst = random_instance(rng, 3, 6);
  const Vec u0 = rng.uniform_vec(6, 0.5, 2.0).normalized();
  const double a = 2.5;
  FlowConfig c = fixed_config(Variant::WnConstant, 1e-3, 1000);
  c.renormalize = false;
  c.eta_ratio = 0.3;
  c.init = InitSpec::polar(0.9, u0);
  const TrajectoryRecord base = integrate(c, inst);
  c.init = InitSpec::polar(0.9, a * u0);
  c.direction_rate = a * a;
  const TrajectoryRecord scaled = integrate(c, inst);
  ASSERT_EQ(base.snapshots.size(), scaled.snapshots.size());
  for (std::size_t k = 0; k < base.snapshots.size(); ++k) {
    const auto& p = std::get<PolarState>(base.snapshots[k].state);
    const auto& q = std::get<PolarState>(scaled.snapshots[k].state);
    ASSERT_NEAR(p.r, q.r, 1e-10);
    ASSERT_LT((a * p.u - q.u).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Integrate, FirstOrderGlobalError) {
  Rng rng(14);
  const auto inst = random_instance(rng, 3, 6);
  for (Variant v : {Variant::Plain, Variant::WnConstant, Variant::WnDynamic, Variant::Signed}) {
    auto endpoint = [&](double h, long steps) {
      FlowConfig c = fixed_config(v, h, steps);
      c.eta_ratio = 0.5;
      c.init = InitSpec::random_positive(1.0, 9);
      return integrate(c, inst).terminal.final_xtilde;
    };
    const double T = 0.5;
    const Vec ref = endpoint(T / 8000, 8000);
    const double e1 = (endpoint(T / 250, 250) - ref).norm();
    const double e2 = (endpoint(T / 500, 500) - ref).norm();
    EXPECT_NEAR(e1 / e2, 2.0, 0.4) << to_string(v);
  }
}
