#pragma once

#include <optional>

#include "wnlab/linalg.hpp"

namespace wnlab {

/// Measurement system A z = b with optional planted ground truth and ℓ1 weights.
struct ProblemInstance {
  Mat A;                       // M × N
  Vec b;                       // M
  std::optional<Vec> x_star;   // N, ground truth used by the reconstruction error
  std::optional<Vec> w;        // N, strictly positive; all-ones when absent

  Eigen::Index rows() const { return A.rows(); }
  Eigen::Index cols() const { return A.cols(); }

  /// Weight vector with the all-ones default applied.
  Vec weights() const;

  /// Throws ConfigError / DegenerateInstanceError if any invariant is broken.
  void validate() const;
};

/// Unnormalized parameter of the plain flow.
struct DenseState {
  Vec x;
};

/// Weight-normalized parameter; the effective vector is (r / ‖u‖₂)·u.
struct PolarState {
  double r = 1.0;
  Vec u;

  Vec effective() const;
};

/// Positive/negative split used by the signed loss; effective x̃ = u₊^L − u₋^L.
struct SignedState {
  Vec u_plus;
  Vec u_minus;
};

/// Pseudoinverse and the orthogonal projector onto the row space of A.
struct Projectors {
  Mat A_pinv;       // N × M
  Mat P_A;          // N × N, equals A†A
  Eigen::Index rank = 0;
  double sigma_max = 0.0;

  /// (I − P_A) v.
  Vec complement(const Vec& v) const { return v - P_A * v; }
};

struct LossGrad {
  double loss = 0.0;
  Vec grad;
};

struct WnGrads {
  double dr = 0.0;  // ∂L̃/∂r
  Vec du;           // ∂L̃/∂u, orthogonal to u
};

struct SignedLossGrads {
  double loss = 0.0;
  Vec d_plus;
  Vec d_minus;
};

/// L(x) = (1/2L)‖A x^{⊙L} − b‖².
double loss(const Vec& x, const ProblemInstance& inst, int depth);

/// ∇L(x) = [Aᵀ(A x^{⊙L} − b)] ⊙ x^{⊙L−1}.
Vec grad_loss(const Vec& x, const ProblemInstance& inst, int depth);

/// Loss and gradient sharing one residual evaluation.
LossGrad loss_and_grad(const Vec& x, const ProblemInstance& inst, int depth);

/// L̃(r, u) = L((r/‖u‖₂)u). Throws SingularStateError when u = 0.
double wn_loss(const PolarState& s, const ProblemInstance& inst, int depth);

/// Both partial derivatives of L̃ at (r, u).
WnGrads wn_grads(const PolarState& s, const ProblemInstance& inst, int depth);

/// Same as wn_grads but also returns L̃ from the shared residual.
WnGrads wn_loss_and_grads(const PolarState& s, const ProblemInstance& inst, int depth,
                          double* loss_out);

/// L±(u₊, u₋) = (1/2L)‖A(u₊^{⊙L} − u₋^{⊙L}) − b‖² and its two gradients.
SignedLossGrads signed_loss_and_grads(const SignedState& s, const ProblemInstance& inst,
                                      int depth);

/// A† via SVD with cutoff σ_max·max(M,N)·1e-12, and P_A = A†A.
Projectors projectors(const Mat& A);
inline Projectors projectors(const ProblemInstance& inst) { return projectors(inst.A); }

/// ‖A‖₂ (largest singular value).
double spectral_norm(const Mat& A);

}  // namespace wnlab
