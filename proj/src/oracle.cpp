#include "wnlab/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wnlab/errors.hpp"

namespace wnlab {

namespace {

using Index = Eigen::Index;

// Tableau rows 0..m-1 are constraints, row m holds reduced costs; the last
// column is the right-hand side (objective row: minus the objective value).
class Tableau {
 public:
  Tableau(Mat T, std::vector<Index> basis, const SimplexOptions& opts, long max_pivots)
      : T_(std::move(T)), basis_(std::move(basis)), opts_(opts), max_pivots_(max_pivots) {}

  Index rows() const { return T_.rows() - 1; }
  Index rhs_col() const { return T_.cols() - 1; }
  Mat& T() { return T_; }
  std::vector<Index>& basis() { return basis_; }
  long pivots() const { return pivots_; }

  void pivot(Index r, Index c) {
    T_.row(r) /= T_(r, c);
    for (Index i = 0; i < T_.rows(); ++i) {
      if (i == r) continue;
      const double f = T_(i, c);
      if (f != 0.0) T_.row(i) -= f * T_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
    if (++pivots_ > max_pivots_) throw SolverFailure("simplex pivot guard tripped");
  }

  // Bland's rule over columns [0, ncols). Returns false when unbounded.
  bool optimize(Index ncols, double cost_tol) {
    const Index m = rows();
    while (true) {
      Index enter = -1;
      for (Index j = 0; j < ncols; ++j) {
        if (T_(m, j) < -cost_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;

      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < m; ++i) {
        const double a = T_(i, enter);
        if (a <= opts_.pivot_tol) continue;
        const double ratio = std::max(0.0, T_(i, rhs_col())) / a;
        const double eps = 1e-12 * std::max(1.0, ratio);
        if (leave < 0 || ratio < best - eps) {
          leave = i;
          best = ratio;
        } else if (ratio <= best + eps &&
                   basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]) {
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  void remove_row(Index r) {
    const Index n = T_.rows() - 1;
    if (r < n) T_.middleRows(r, n - r) = T_.bottomRows(n - r).eval();
    T_.conservativeResize(n, Eigen::NoChange);
    basis_.erase(basis_.begin() + r);
  }

 private:
  Mat T_;
  std::vector<Index> basis_;
  SimplexOptions opts_;
  long max_pivots_;
  long pivots_ = 0;
};

}  // namespace

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
  }
  return "?";
}

OracleSolution solve_standard_lp(const Mat& A, const Vec& b, const Vec& c, const SimplexOptions& opts) {
  const Index m = A.rows(), n = A.cols();
  if (b.size() != m) throw ConfigError("LP: b length does not match A");
  if (c.size() != n) throw ConfigError("LP: cost length does not match A");
  if (!A.allFinite() || !b.allFinite() || !c.allFinite()) throw DegenerateInstanceError("LP data not finite");

  // Row scaling and sign normalization so that b ≥ 0.
  Mat As = A;
  Vec bs = b;
  for (Index i = 0; i < m; ++i) {
    double s = As.row(i).cwiseAbs().maxCoeff();
    if (s == 0.0) s = 1.0;
    if (bs[i] < 0.0) s = -s;
    As.row(i) /= s;
    bs[i] /= s;
  }
  const double cscale = std::max(c.cwiseAbs().maxCoeff(), 1e-300);
  const long max_pivots = opts.max_pivots > 0 ? opts.max_pivots : 50 * (m + n) + 1000;

  OracleSolution sol;
  // Phase 1: artificials n..n+m-1.
  Mat T = Mat::Zero(m + 1, n + m + 1);
  T.topLeftCorner(m, n) = As;
  T.block(0, n, m, m).setIdentity();
  T.topRightCorner(m, 1) = bs;
  for (Index i = 0; i < m; ++i) {
    T.row(m).head(n) -= As.row(i);
    T(m, n + m) -= bs[i];
  }
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;
  Tableau tab(std::move(T), std::move(basis), opts, max_pivots);
  tab.optimize(n, opts.feas_tol);

  const double infeas = -tab.T()(tab.rows(), tab.rhs_col());
  if (infeas > opts.feas_tol * (1.0 + bs.cwiseAbs().sum())) {
    sol.status = LpStatus::Infeasible;
    sol.iterations = tab.pivots();
    return sol;
  }

  // Drive remaining artificials out; drop rows that are linearly dependent.
  std::vector<Index> kept_rows;
  for (Index i = 0; i < m; ++i) kept_rows.push_back(i);
  for (Index i = 0; i < tab.rows();) {
    if (tab.basis()[static_cast<std::size_t>(i)] < n) {
      ++i;
      continue;
    }
    Index col = -1;
    for (Index j = 0; j < n; ++j) {
      if (std::abs(tab.T()(i, j)) > opts.pivot_tol) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      tab.pivot(i, col);
      ++i;
    } else {
      tab.remove_row(i);
      kept_rows.erase(kept_rows.begin() + i);
    }
  }

  // Phase 2 on the original columns; artificial columns are ignored.
  const Index mr = tab.rows();
  Mat& T2 = tab.T();
  T2.row(mr).setZero();
  T2.row(mr).head(n) = c.transpose() / cscale;
  for (Index i = 0; i < mr; ++i) {
    const Index bj = tab.basis()[static_cast<std::size_t>(i)];
    const double cb = c[bj] / cscale;
    if (cb != 0.0) T2.row(mr) -= cb * T2.row(i);
  }
  const bool bounded = tab.optimize(n, opts.feas_tol);
  sol.iterations = tab.pivots();
  sol.basis = tab.basis();
  if (!bounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }

  // Re-solve the basis system on the original data.
  sol.z = Vec::Zero(n);
  Vec y = Vec::Zero(m);
  if (mr > 0) {
    Mat B(mr, mr);
    Vec bk(mr), cb(mr);
    for (Index i = 0; i < mr; ++i) {
      const Index row = kept_rows[static_cast<std::size_t>(i)];
      for (Index k = 0; k < mr; ++k) B(i, k) = A(row, sol.basis[static_cast<std::size_t>(k)]);
      bk[i] = b[row];
    }
    for (Index k = 0; k < mr; ++k) cb[k] = c[sol.basis[static_cast<std::size_t>(k)]];
    Eigen::PartialPivLU<Mat> lu(B);
    const Vec zb = lu.solve(bk);
    const Vec yk = lu.transpose().solve(cb);
    for (Index k = 0; k < mr; ++k) sol.z[sol.basis[static_cast<std::size_t>(k)]] = zb[k];
    for (Index i = 0; i < mr; ++i) y[kept_rows[static_cast<std::size_t>(i)]] = yk[i];
  }
  const double ztol = 1e-7 * (1.0 + sol.z.cwiseAbs().maxCoeff());
  if (sol.z.size() && sol.z.minCoeff() < -ztol) throw SolverFailure("basis re-solve produced a negative entry");
  sol.z = sol.z.cwiseMax(0.0);
  const double resid = (A * sol.z - b).cwiseAbs().maxCoeff();
  if (resid > 1e-6 * (1.0 + b.cwiseAbs().maxCoeff())) throw SolverFailure("basis re-solve is not feasible");

  sol.dual = y;
  const Vec reduced = c - A.transpose() * y;
  sol.min_reduced_cost = n ? reduced.minCoeff() : 0.0;
  sol.objective = c.dot(sol.z);
  sol.status = LpStatus::Optimal;
  return sol;
}

OracleSolution min_weighted_l1_nonneg(const ProblemInstance& inst, const std::optional<Vec>& w,
                                      const SimplexOptions& opts) {
  const Vec weights = w ? *w : inst.weights();
  require_size(weights, inst.cols(), "weights");
  if (!all_positive(weights)) throw ConfigError("weights must be strictly positive");
  return solve_standard_lp(inst.A, inst.b, weights, opts);
}

OracleSolution min_l1_signed(const ProblemInstance& inst, const SimplexOptions& opts) {
  const Index n = inst.cols();
  Mat split(inst.rows(), 2 * n);
  split << inst.A, -inst.A;
  OracleSolution sol = solve_standard_lp(split, inst.b, Vec::Ones(2 * n), opts);
  if (sol.status == LpStatus::Optimal) {
    sol.z = (sol.z.head(n) - sol.z.tail(n)).eval();
    sol.objective = sol.z.lpNorm<1>();
  }
  return sol;
}

KernelWitness positive_kernel_lp(const Mat& A, double margin_tol) {
  const Index m = A.rows(), n = A.cols();
  // Columns: s (n), t (1), σ (n).
  Mat C = Mat::Zero(m + n, 2 * n + 1);
  C.topLeftCorner(m, n) = A;
  C.block(0, n, m, 1) = A.rowwise().sum();
  C.block(m, 0, n, n).setIdentity();
  C.block(m, n, n, 1).setOnes();
  C.block(m, n + 1, n, n).setIdentity();
  Vec rhs = Vec::Zero(m + n);
  rhs.tail(n).setOnes();
  Vec cost = Vec::Zero(2 * n + 1);
  cost[n] = -1.0;

  const OracleSolution sol = solve_standard_lp(C, rhs, cost);
  if (sol.status != LpStatus::Optimal) throw SolverFailure("positive-kernel LP did not solve");
  KernelWitness out;
  out.t = sol.z[n];
  out.v = sol.z.head(n).array() + out.t;
  out.exists = out.t > margin_tol;
  return out;
}

std::optional<Vec> positive_kernel_witness(const ProblemInstance& inst, double margin_tol) {
  KernelWitness w = positive_kernel_lp(inst.A, margin_tol);
  if (!w.exists) return std::nullopt;
  return w.v;
}

}  // namespace wnlab
