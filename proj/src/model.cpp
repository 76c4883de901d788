#include "wnlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "wnlab/errors.hpp"

namespace wnlab {

namespace {

void check_depth(int depth) {
  if (depth < 1) throw ConfigError("depth must be >= 1, got " + std::to_string(depth));
}

void check_dims(const Vec& x, const ProblemInstance& inst) {
  if (inst.b.size() != inst.A.rows()) {
    throw ConfigError("b has " + std::to_string(inst.b.size()) + " entries but A has " +
                      std::to_string(inst.A.rows()) + " rows");
  }
  require_size(x, inst.A.cols(), "parameter vector");
}

double norm_or_throw(const Vec& u) {
  const double n = u.norm();
  if (!(n > 0.0)) throw SingularStateError("direction vector u has zero norm");
  return n;
}

}  // namespace

Vec ProblemInstance::weights() const { return w ? *w : Vec::Ones(A.cols()); }

void ProblemInstance::validate() const {
  if (A.rows() < 1 || A.cols() < 1) throw ConfigError("A must have at least one row and column");
  if (b.size() != A.rows()) throw ConfigError("b length does not match the rows of A");
  if (!A.allFinite() || !b.allFinite()) throw DegenerateInstanceError("A or b has non-finite entries");
  if (x_star) {
    require_size(*x_star, A.cols(), "x_star");
    if (!x_star->allFinite()) throw DegenerateInstanceError("x_star has non-finite entries");
  }
  if (w) {
    require_size(*w, A.cols(), "w");
    if (!all_positive(*w)) throw ConfigError("weights must be strictly positive");
  }
}

Vec PolarState::effective() const { return (r / norm_or_throw(u)) * u; }

LossGrad loss_and_grad(const Vec& x, const ProblemInstance& inst, int depth) {
  check_depth(depth);
  check_dims(x, inst);
  const Vec residual = inst.A * hadamard_pow(x, depth) - inst.b;
  LossGrad out;
  out.loss = residual.squaredNorm() / (2.0 * depth);
  out.grad = (inst.A.transpose() * residual).cwiseProduct(hadamard_pow(x, depth - 1));
  return out;
}

double loss(const Vec& x, const ProblemInstance& inst, int depth) {
  check_depth(depth);
  check_dims(x, inst);
  return (inst.A * hadamard_pow(x, depth) - inst.b).squaredNorm() / (2.0 * depth);
}

Vec grad_loss(const Vec& x, const ProblemInstance& inst, int depth) {
  return loss_and_grad(x, inst, depth).grad;
}

double wn_loss(const PolarState& s, const ProblemInstance& inst, int depth) {
  return loss(s.effective(), inst, depth);
}

WnGrads wn_loss_and_grads(const PolarState& s, const ProblemInstance& inst, int depth,
                          double* loss_out) {
  const double nu = norm_or_throw(s.u);
  const Vec x = (s.r / nu) * s.u;
  const LossGrad lg = loss_and_grad(x, inst, depth);
  if (loss_out) *loss_out = lg.loss;

  WnGrads g;
  const double u_dot = s.u.dot(lg.grad);
  g.dr = u_dot / nu;
  // (r/‖u‖)(I − uuᵀ/‖u‖²)∇L
  g.du = (s.r / nu) * (lg.grad - (u_dot / (nu * nu)) * s.u);
  return g;
}

WnGrads wn_grads(const PolarState& s, const ProblemInstance& inst, int depth) {
  return wn_loss_and_grads(s, inst, depth, nullptr);
}

SignedLossGrads signed_loss_and_grads(const SignedState& s, const ProblemInstance& inst,
                                       int depth) {
  check_depth(depth);
  check_dims(s.u_plus, inst);
  check_dims(s.u_minus, inst);
  const Vec residual =
      inst.A * (hadamard_pow(s.u_plus, depth) - hadamard_pow(s.u_minus, depth)) - inst.b;
  const Vec back = inst.A.transpose() * residual;
  SignedLossGrads out;
  out.loss = residual.squaredNorm() / (2.0 * depth);
  out.d_plus = back.cwiseProduct(hadamard_pow(s.u_plus, depth - 1));
  out.d_minus = -back.cwiseProduct(hadamard_pow(s.u_minus, depth - 1));
  return out;
}

Projectors projectors(const Mat& A) {
  if (A.size() == 0 || A.cwiseAbs().maxCoeff() == 0.0) {
    throw DegenerateInstanceError("cannot build projectors for an all-zero matrix");
  }
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cutoff =
      sv[0] * static_cast<double>(std::max(A.rows(), A.cols())) * 1e-12;

  Projectors p;
  p.sigma_max = sv[0];
  Vec inv = Vec::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > cutoff) {
      inv[i] = 1.0 / sv[i];
      ++p.rank;
    }
  }
  const Mat& V = svd.matrixV();
  const Mat& U = svd.matrixU();
  p.A_pinv = V * inv.asDiagonal() * U.transpose();
  // Build P_A from the retained right singular vectors so it is symmetric and
  // idempotent to working precision rather than through the product A†A.
  const Mat Vr = V.leftCols(p.rank);
  p.P_A = Vr * Vr.transpose();
  return p;
}

double spectral_norm(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::BDCSVD<Mat> svd(A);
  return svd.singularValues()[0];
}

}  // namespace wnlab
