#pragma once

// Central finite-difference check of the exact cross-entropy gradients. The
// reference side only ever calls the forward path (encode + posterior +
// cross_entropy), so it stays independent of the backprop implementation it
// judges.

#include "klab/objectives.hpp"

namespace klab {

struct GradCheckReport {
  double max_rel_err = 0.0;
  int params_checked = 0;
  bool pass = false;
};

/// Perturbs every encoder parameter and every head weight by +-eps and
/// compares the central difference against cross_entropy_backprop.
/// Relative error uses max(1, |analytic|, |numeric|) in the denominator.
GradCheckReport finite_difference_check(const EncoderParams& params,
                                        const ClusterHead& head, const Matrix& x_batch,
                                        const PosteriorMatrix& q, double tau_s,
                                        double eps = 1e-5, double tolerance = 1e-5);

/// The standard small instance (3 samples, K = 3, input dim 4, two small
/// hidden layers) with a non-stationary q, deterministic in the seed.
struct GradCheckInstance {
  EncoderParams params;
  ClusterHead head;
  Matrix x_batch;
  PosteriorMatrix q;
  double tau_s = 0.1;
};

GradCheckInstance make_gradcheck_instance(std::uint64_t seed);

}  // namespace klab
