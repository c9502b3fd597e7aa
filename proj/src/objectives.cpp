#include "klab/objectives.hpp"

#include <cmath>

namespace klab {

namespace {

void check_same_shape(const PosteriorMatrix& q, const PosteriorMatrix& p,
                      const char* where) {
  if (q.rows() != p.rows() || q.cols() != p.cols())
    throw ShapeError(std::string(where) + ": shape mismatch");
}

}  // namespace

double entropy(const Vector& dist) {
  if (dist.size() == 0) throw InvalidDistributionError("entropy: empty distribution");
  if (dist.minCoeff() < 0.0)
    throw InvalidDistributionError("entropy: negative entry");
  if (std::abs(dist.sum() - 1.0) > 1e-6)
    throw InvalidDistributionError("entropy: does not sum to 1");
  double h = 0.0;
  for (Eigen::Index y = 0; y < dist.size(); ++y)
    if (dist(y) > 0.0) h -= dist(y) * std::log(dist(y));
  return h;
}

double kl_divergence(const PosteriorMatrix& q, const PosteriorMatrix& p) {
  check_same_shape(q, p, "kl_divergence");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index y = 0; y < q.cols(); ++y) {
      const double qv = q(i, y);
      if (qv == 0.0) continue;
      const double pv = p(i, y);
      if (pv == 0.0)
        throw InfiniteDivergenceError("kl_divergence: q > 0 where p = 0");
      kl += qv * std::log(qv / pv);
    }
  return kl;
}

double cross_entropy(const PosteriorMatrix& q, const PosteriorMatrix& p) {
  check_same_shape(q, p, "cross_entropy");
  double ce = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index y = 0; y < q.cols(); ++y) {
      const double qv = q(i, y);
      if (qv == 0.0) continue;
      const double pv = p(i, y);
      if (pv == 0.0)
        throw InfiniteDivergenceError("cross_entropy: q > 0 where p = 0");
      ce -= qv * std::log(pv);
    }
  return ce;
}

double entropy_rows(const PosteriorMatrix& q) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < q.rows(); ++i)
    for (Eigen::Index y = 0; y < q.cols(); ++y)
      if (q(i, y) > 0.0) h -= q(i, y) * std::log(q(i, y));
  return h;
}

ObjectiveBreakdown regularized_objective(const PosteriorMatrix& q,
                                         const PosteriorMatrix& p) {
  check_same_shape(q, p, "regularized_objective");
  ObjectiveBreakdown b;
  b.kl_term = -entropy_rows(q);
  b.cross_entropy_term = cross_entropy(q, p);
  for (Eigen::Index y = 0; y < q.cols(); ++y) {
    const double col = q.col(y).sum();
    if (col > 0.0) b.entropy_regularizer_term += col * std::log(col);
  }
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double r = q.row(i).sum() - 1.0;
    b.sum_to_one_penalty += 0.5 * r * r;
  }
  b.total = b.kl_term + b.cross_entropy_term + b.entropy_regularizer_term +
            b.sum_to_one_penalty;
  return b;
}

double regularizer_mean_normalized(const PosteriorMatrix& q) {
  if (q.rows() == 0) throw InvalidInputError("regularizer_mean_normalized: empty");
  double acc = 0.0;
  for (Eigen::Index y = 0; y < q.cols(); ++y) {
    const double mean = q.col(y).mean();
    if (mean > 0.0) acc += mean * std::log(mean);
  }
  return acc;
}

double GradientSet::squared_norm() const {
  double acc = d_cluster_weights.squaredNorm();
  for (const auto& layer : d_encoder)
    acc += layer.weight.squaredNorm() + layer.bias.squaredNorm();
  return acc;
}

LossAndGradient cross_entropy_loss_and_gradient(const EncoderParams& params,
                                                const ClusterHead& head,
                                                const Matrix& x_batch,
                                                const PosteriorMatrix& q, double tau_s) {
  if (!(tau_s > 0.0))
    throw InvalidParameterError("cross_entropy_backprop: tau_s must be positive");
  if (q.rows() != x_batch.rows())
    throw ShapeError("cross_entropy_backprop: q rows != batch rows");
  if (q.cols() != head.weights.rows())
    throw ShapeError("cross_entropy_backprop: q cols != K");

  const ForwardTrace tr = encode_with_trace(params, x_batch);
  const PosteriorMatrix p = row_softmax(tr.z * head.weights.transpose(), tau_s);

  LossAndGradient out;
  out.loss = cross_entropy(q, p);

  // d loss / d similarity s_iy, with s = z W^T and p = softmax(s / tau):
  // (sum_y' q_iy') p_iy - q_iy, all over tau.
  Matrix ds(q.rows(), q.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double qsum = q.row(i).sum();
    ds.row(i) = (qsum * p.row(i) - q.row(i)) / tau_s;
  }

  GradientSet& g = out.gradient;
  g.d_cluster_weights = ds.transpose() * tr.z;

  // Through the unit-norm projection: dz -> (dz - (dz . z) z) / ||u||.
  Matrix dz = ds * head.weights;
  Matrix du(dz.rows(), dz.cols());
  for (Eigen::Index i = 0; i < dz.rows(); ++i) {
    const double inner = dz.row(i).dot(tr.z.row(i));
    du.row(i) = (dz.row(i) - inner * tr.z.row(i)) / tr.pre_norm_norms(i);
  }

  // Backwards through the layers; tanh derivative from the stored activations.
  const std::size_t n_layers = params.layers.size();
  g.d_encoder.resize(n_layers);
  Matrix delta = du;  // gradient wrt current layer's pre-activation output
  for (std::size_t l = n_layers; l-- > 0;) {
    const Matrix& input = tr.activations[l];
    g.d_encoder[l].weight = delta.transpose() * input;
    g.d_encoder[l].bias = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix dh = delta * params.layers[l].weight;
      delta = dh.cwiseProduct(
          (1.0 - tr.activations[l].array().square()).matrix());
    }
  }
  return out;
}

GradientSet cross_entropy_backprop(const EncoderParams& params, const ClusterHead& head,
                                   const Matrix& x_batch, const PosteriorMatrix& q,
                                   double tau_s) {
  return cross_entropy_loss_and_gradient(params, head, x_batch, q, tau_s).gradient;
}

Matrix paper_gradient_it4(const Vector& q_row, const Vector& p_row, const Vector& z,
                          const ClusterHead& head, double tau) {
  if (q_row.size() != head.weights.rows() || p_row.size() != head.weights.rows())
    throw ShapeError("paper_gradient_it4: row length != K");
  if (z.size() != head.weights.cols())
    throw ShapeError("paper_gradient_it4: embedding dim mismatch");
  Matrix g(head.weights.rows(), head.weights.cols());
  for (Eigen::Index y = 0; y < head.weights.rows(); ++y)
    g.row(y) = (q_row(y) * (1.0 - p_row(y)) / tau) *
               (z.transpose() - head.weights.row(y));
  return g;
}

}  // namespace klab
