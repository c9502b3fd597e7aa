#pragma once

// Scalar objectives and their gradients: K-L divergence between teacher and
// student posteriors, cross-entropy, the entropy-regularized objective with
// its four summands kept separate, exact backprop through the encoder and
// cluster head, and the single-sample textbook gradient kept as a diagnostic.

#include "klab/model.hpp"

namespace klab {

/// The four summands of the regularized objective, stored separately.
/// kl_term is the q-log-q summand (the K-L divergence minus the
/// cross-entropy), so kl_term + cross_entropy_term = KL(q||p) when q is
/// row-stochastic. entropy_regularizer_term uses raw column sums as printed;
/// see regularizer_mean_normalized for the (1/N) variant.
struct ObjectiveBreakdown {
  double kl_term = 0.0;                  // sum_j sum_y q log q
  double cross_entropy_term = 0.0;       // -sum_j sum_y q log p
  double entropy_regularizer_term = 0.0; // sum_y (sum_j q_jy) log(sum_j q_jy)
  double sum_to_one_penalty = 0.0;       // 1/2 sum_j (sum_y q_jy - 1)^2
  double total = 0.0;
};

/// -sum_y d_y log d_y with 0 log 0 = 0. Requires a valid distribution.
double entropy(const Vector& dist);

/// sum_i sum_y q log(q/p), 0 log 0 = 0. q > 0 where p = 0 raises
/// InfiniteDivergenceError instead of returning inf/NaN.
double kl_divergence(const PosteriorMatrix& q, const PosteriorMatrix& p);

/// -sum_i sum_y q log p; equals kl_divergence(q, p) + entropy of q's rows.
double cross_entropy(const PosteriorMatrix& q, const PosteriorMatrix& p);

/// Sum of per-row entropies of q.
double entropy_rows(const PosteriorMatrix& q);

ObjectiveBreakdown regularized_objective(const PosteriorMatrix& q,
                                         const PosteriorMatrix& p);

/// Diagnostic (1/N)-normalized regularizer: sum_y qbar_y log qbar_y where
/// qbar is the column mean of q.
double regularizer_mean_normalized(const PosteriorMatrix& q);

struct GradientSet {
  std::vector<DenseLayer> d_encoder;  // same shapes as EncoderParams
  Matrix d_cluster_weights;           // K x embed_dim

  double squared_norm() const;
};

/// Exact gradient of -sum_i sum_y q_iy log p_iy where p is the student
/// posterior of the encoded batch at tau_s, through the softmax, the head,
/// the l2 normalization and every encoder layer. The head block reduces to
/// -(1/tau_s) sum_i (q_iy - p_iy) z_i (before any unit-norm re-projection).
GradientSet cross_entropy_backprop(const EncoderParams& params, const ClusterHead& head,
                                   const Matrix& x_batch, const PosteriorMatrix& q,
                                   double tau_s);

/// Loss value + gradient in one pass (the trainer's hot path).
struct LossAndGradient {
  double loss = 0.0;
  GradientSet gradient;
};
LossAndGradient cross_entropy_loss_and_gradient(const EncoderParams& params,
                                                const ClusterHead& head,
                                                const Matrix& x_batch,
                                                const PosteriorMatrix& q, double tau_s);

/// The printed single-sample expression (1/tau) q_y (1 - p_y)(z - w_y) per
/// cluster row. Diagnostic only: it drops the softmax cross-cluster coupling
/// and is never used for training.
Matrix paper_gradient_it4(const Vector& q_row, const Vector& p_row, const Vector& z,
                          const ClusterHead& head, double tau);

}  // namespace klab
