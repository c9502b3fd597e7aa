#include "klab/model.hpp"

#include <cmath>

namespace klab {

int EncoderParams::input_dim() const {
  if (layers.empty()) throw ShapeError("EncoderParams: no layers");
  return static_cast<int>(layers.front().weight.cols());
}

int EncoderParams::embed_dim() const {
  if (layers.empty()) throw ShapeError("EncoderParams: no layers");
  return static_cast<int>(layers.back().weight.rows());
}

void EncoderParams::validate() const {
  if (layers.empty()) throw ShapeError("EncoderParams: no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.bias.size() != layer.weight.rows())
      throw ShapeError("EncoderParams: bias/weight rows mismatch");
    if (l > 0 && layers[l - 1].weight.rows() != layer.weight.cols())
      throw ShapeError("EncoderParams: layer dimensions do not chain");
    if (!layer.weight.allFinite() || !layer.bias.allFinite())
      throw InvalidInputError("EncoderParams: non-finite parameter");
  }
}

void ClusterHead::validate() const {
  if (weights.rows() < 1) throw ShapeError("ClusterHead: needs at least one row");
  for (Eigen::Index y = 0; y < weights.rows(); ++y)
    if (std::abs(weights.row(y).norm() - 1.0) > 1e-9)
      throw NormalizationError("ClusterHead: row not unit norm");
}

EncoderParams make_encoder(int input_dim, const std::vector<int>& hidden_dims,
                           int embed_dim, SplitMix64& rng) {
  if (input_dim < 1 || embed_dim < 1)
    throw InvalidParameterError("make_encoder: bad dimensions");
  EncoderParams params;
  int in = input_dim;
  std::vector<int> dims = hidden_dims;
  dims.push_back(embed_dim);
  for (int out : dims) {
    if (out < 1) throw InvalidParameterError("make_encoder: bad hidden dim");
    DenseLayer layer;
    layer.weight.resize(out, in);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    layer.bias = Vector::Zero(out);
    params.layers.push_back(std::move(layer));
    in = out;
  }
  return params;
}

ClusterHead make_cluster_head(int k, int embed_dim, SplitMix64& rng) {
  if (k < 1 || embed_dim < 1) throw InvalidParameterError("make_cluster_head: bad dims");
  ClusterHead head;
  head.weights = l2_normalize_rows(gaussian_matrix(k, embed_dim, rng));
  return head;
}

ForwardTrace encode_with_trace(const EncoderParams& params, const Matrix& batch) {
  params.validate();
  if (batch.cols() != params.input_dim())
    throw ShapeError("encode: batch column count != encoder input dim");

  ForwardTrace tr;
  tr.activations.reserve(params.layers.size());
  tr.activations.push_back(batch);
  const std::size_t n_layers = params.layers.size();
  for (std::size_t l = 0; l + 1 < n_layers; ++l) {
    const auto& layer = params.layers[l];
    Matrix a = (tr.activations.back() * layer.weight.transpose()).rowwise() +
               layer.bias.transpose();
    tr.activations.push_back(a.array().tanh().matrix());
  }
  const auto& last = params.layers.back();
  tr.pre_norm =
      (tr.activations.back() * last.weight.transpose()).rowwise() + last.bias.transpose();

  tr.pre_norm_norms.resize(tr.pre_norm.rows());
  tr.z.resize(tr.pre_norm.rows(), tr.pre_norm.cols());
  for (Eigen::Index i = 0; i < tr.pre_norm.rows(); ++i) {
    const double n = tr.pre_norm.row(i).norm();
    if (!(n > 1e-12))
      throw DegenerateVectorError("encode: embedding collapsed to zero norm");
    tr.pre_norm_norms(i) = n;
    tr.z.row(i) = tr.pre_norm.row(i) / n;
  }
  return tr;
}

EmbeddingBatch encode(const EncoderParams& params, const Matrix& batch) {
  return encode_with_trace(params, batch).z;
}

PosteriorMatrix student_posterior(const ClusterHead& head, const EmbeddingBatch& z,
                                  double tau) {
  if (z.cols() != head.weights.cols())
    throw ShapeError("student_posterior: embedding dim mismatch");
  return row_softmax(z * head.weights.transpose(), tau);
}

PosteriorMatrix gaussian_posterior_with_priors(const ClusterHead& head,
                                               const Vector& priors,
                                               const EmbeddingBatch& z, double tau) {
  if (!(tau > 0.0)) throw InvalidParameterError("gaussian_posterior_with_priors: tau <= 0");
  if (z.cols() != head.weights.cols())
    throw ShapeError("gaussian_posterior_with_priors: embedding dim mismatch");
  if (priors.size() != head.weights.rows())
    throw ShapeError("gaussian_posterior_with_priors: priors length != K");
  if (priors.minCoeff() < 0.0 || std::abs(priors.sum() - 1.0) > 1e-6)
    throw InvalidDistributionError("gaussian_posterior_with_priors: invalid priors");

  const Eigen::Index n = z.rows();
  const Eigen::Index k = head.weights.rows();
  PosteriorMatrix out(n, k);
  Vector log_prior(k);
  for (Eigen::Index y = 0; y < k; ++y)
    log_prior(y) =
        priors(y) > 0.0 ? std::log(priors(y)) : -std::numeric_limits<double>::infinity();

  for (Eigen::Index i = 0; i < n; ++i) {
    Vector logit(k);
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index y = 0; y < k; ++y) {
      const double d2 = (z.row(i) - head.weights.row(y)).squaredNorm();
      logit(y) = -d2 / tau + log_prior(y);
      m = std::max(m, logit(y));
    }
    if (!std::isfinite(m))
      throw NormalizationError("gaussian_posterior_with_priors: all-zero row");
    double sum = 0.0;
    for (Eigen::Index y = 0; y < k; ++y) {
      out(i, y) = std::isfinite(logit(y)) ? std::exp(logit(y) - m) : 0.0;
      sum += out(i, y);
    }
    out.row(i) /= sum;
  }
  return out;
}

std::vector<int> argmax_rows(const PosteriorMatrix& p) {
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    p.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace klab
