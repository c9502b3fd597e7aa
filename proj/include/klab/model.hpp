#pragma once

// Encoder (tanh MLP, linear output, l2-normalized rows) and the cluster head
// producing assignment posteriors. Forward passes are pure; parameters are
// plain value types.

#include <vector>

#include "klab/numerics.hpp"

namespace klab {

struct DenseLayer {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct EncoderParams {
  std::vector<DenseLayer> layers;  // hidden layers tanh, last layer linear

  int input_dim() const;
  int embed_dim() const;
  void validate() const;
};

/// K unit-norm weight vectors, one row per cluster.
struct ClusterHead {
  Matrix weights;  // K x embed_dim

  int k() const { return static_cast<int>(weights.rows()); }
  int embed_dim() const { return static_cast<int>(weights.cols()); }

  /// w_bar, the mean of the cluster weight vectors.
  Vector mean_weight() const { return weights.colwise().mean().transpose(); }

  /// Re-project every row onto the unit sphere (applied after each update).
  void renormalize_rows() { weights = l2_normalize_rows(weights); }

  void validate() const;
};

using EmbeddingBatch = Matrix;    // N x embed_dim, unit rows
using PosteriorMatrix = Matrix;   // N x K, row-stochastic

/// Fan-in scaled uniform weights, zero biases.
EncoderParams make_encoder(int input_dim, const std::vector<int>& hidden_dims,
                           int embed_dim, SplitMix64& rng);

/// K l2-normalized Gaussian rows.
ClusterHead make_cluster_head(int k, int embed_dim, SplitMix64& rng);

/// Forward pass; output rows are unit-norm.
EmbeddingBatch encode(const EncoderParams& params, const Matrix& batch);

/// Forward pass keeping every intermediate needed by backprop.
struct ForwardTrace {
  std::vector<Matrix> activations;  // input, then each hidden tanh output
  Matrix pre_norm;                  // final linear output u, N x embed_dim
  Vector pre_norm_norms;            // ||u_i||
  EmbeddingBatch z;                 // normalized rows
};

ForwardTrace encode_with_trace(const EncoderParams& params, const Matrix& batch);

/// Row i = softmax(z_i . W^T / tau): the hypersphere posterior with priors
/// ignored.
PosteriorMatrix student_posterior(const ClusterHead& head, const EmbeddingBatch& z,
                                  double tau);

/// Diagnostic Gaussian posterior with explicit priors:
/// row entry y proportional to exp(-||z - w_y||^2 / tau) * priors_y.
/// The exponent carries no 1/2 factor; the constant is absorbed into tau.
/// Computed in log space so zero priors are exact -inf logits.
PosteriorMatrix gaussian_posterior_with_priors(const ClusterHead& head,
                                               const Vector& priors,
                                               const EmbeddingBatch& z, double tau);

/// Hard assignment per row.
std::vector<int> argmax_rows(const PosteriorMatrix& p);

}  // namespace klab
