#include "klab/gradcheck.hpp"

#include <cmath>

namespace klab {

namespace {

double forward_loss(const EncoderParams& params, const ClusterHead& head,
                    const Matrix& x_batch, const PosteriorMatrix& q, double tau_s) {
  const PosteriorMatrix p = student_posterior(head, encode(params, x_batch), tau_s);
  return cross_entropy(q, p);
}

double rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

}  // namespace

GradCheckReport finite_difference_check(const EncoderParams& params,
                                        const ClusterHead& head, const Matrix& x_batch,
                                        const PosteriorMatrix& q, double tau_s,
                                        double eps, double tolerance) {
  const GradientSet analytic = cross_entropy_backprop(params, head, x_batch, q, tau_s);

  // Probe local copies so the caller's state is untouched.
  EncoderParams probed_params = params;
  ClusterHead probed_head = head;

  GradCheckReport rep;
  auto probe = [&](double& slot, double analytic_value) {
    const double saved = slot;
    slot = saved + eps;
    const double up = forward_loss(probed_params, probed_head, x_batch, q, tau_s);
    slot = saved - eps;
    const double down = forward_loss(probed_params, probed_head, x_batch, q, tau_s);
    slot = saved;
    const double numeric = (up - down) / (2.0 * eps);
    rep.max_rel_err = std::max(rep.max_rel_err, rel_err(analytic_value, numeric));
    ++rep.params_checked;
  };

  for (std::size_t l = 0; l < probed_params.layers.size(); ++l) {
    auto& layer = probed_params.layers[l];
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        probe(layer.weight(r, c), analytic.d_encoder[l].weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r)
      probe(layer.bias(r), analytic.d_encoder[l].bias(r));
  }
  for (Eigen::Index r = 0; r < probed_head.weights.rows(); ++r)
    for (Eigen::Index c = 0; c < probed_head.weights.cols(); ++c)
      probe(probed_head.weights(r, c), analytic.d_cluster_weights(r, c));

  rep.pass = rep.max_rel_err < tolerance;
  return rep;
}

GradCheckInstance make_gradcheck_instance(std::uint64_t seed) {
  SplitMix64 root(seed);
  SplitMix64 enc_rng = root.split(1);
  SplitMix64 head_rng = root.split(2);
  SplitMix64 data_rng = root.split(3);
  SplitMix64 q_rng = root.split(4);

  GradCheckInstance inst;
  inst.params = make_encoder(4, {6, 5}, 4, enc_rng);
  // Nonzero biases so their gradient slots are exercised away from the origin.
  for (auto& layer : inst.params.layers)
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
      layer.bias(i) = 0.1 * enc_rng.normal();
  inst.head = make_cluster_head(3, 4, head_rng);
  inst.x_batch = gaussian_matrix(3, 4, data_rng);
  // Random row-stochastic teacher targets, kept away from the student's own
  // posterior so the gradient is O(1).
  inst.q = row_softmax(gaussian_matrix(3, 3, q_rng), 0.5);
  inst.tau_s = 0.1;
  return inst;
}

}  // namespace klab
