#pragma once

// Teacher-side machinery: prior estimation, the three normalization
// strategies (identity, inverse-prior, centering), EMA parameter updates,
// temperature calibration from the boundary-sample condition, and the
// Jensen-bound diagnostics relating inverse-prior scaling to centering.

#include <string>

#include "klab/model.hpp"

namespace klab {

enum class NormalizationStrategy { none, inverse_prior, centering };

NormalizationStrategy parse_strategy(const std::string& name);
std::string strategy_name(NormalizationStrategy s);

struct TemperatureConfig {
  double tau_teacher = 0.05;
  double tau_student = 0.1;
  double cos_threshold = 0.4;   // similarity of boundary samples to their cluster
  double boundary_prob = 0.5;   // target assignment probability at the boundary

  void validate() const;
};

/// Frozen teacher copy plus its dataset statistics.
struct TeacherState {
  EncoderParams params;
  ClusterHead head;
  Vector priors;       // Q(y), length K, sums to 1
  Vector center;       // z_bar, embed_dim
  double tau_teacher = 0.05;

  void validate() const;
};

/// Column means of a row-stochastic matrix; the estimated cluster priors.
Vector estimate_priors(const PosteriorMatrix& q_or_p);

/// Scale row entries by 1/max(priors_y, floor), then renormalize each row.
/// Low-prior clusters get boosted; uniform priors leave the input unchanged.
PosteriorMatrix inverse_prior_normalize(const PosteriorMatrix& p, const Vector& priors,
                                        double floor = 1e-8);

/// Row i = softmax((z_i - center) . W^T / tau_t). center = 0 reduces to the
/// plain posterior.
PosteriorMatrix centering_normalize(const ClusterHead& head, const EmbeddingBatch& z,
                                    const Vector& center, double tau_t);

/// m * old_center + (1 - m) * batch mean of z_all.
Vector update_center(const EmbeddingBatch& z_all, const Vector& old_center, double momentum);

/// Every teacher parameter <- m * teacher + (1 - m) * student; head rows are
/// re-projected to unit norm afterwards. Priors and center are untouched
/// (they are recomputed by the refresh).
TeacherState ema_update(const TeacherState& teacher, const EncoderParams& student_params,
                        const ClusterHead& student_head, double momentum);

/// Solves exp(s/tau) / (exp(s/tau) + k - 1) = p for tau:
/// tau = s / log((k - 1) p / (1 - p)). For p = 0.5 this is s / log(k - 1).
double calibrate_teacher_temperature(const TemperatureConfig& cfg, int k);

/// Cluster-sum bound for a single embedding. lhs = sum_i exp(z.w_i / tau).
/// standard_bound = K exp(z.w_bar / tau) (Jensen; lhs >= standard_bound).
/// paper_bound = exp(K z.w_bar / tau), the other printed form, reported as-is.
struct JensenWeightsGap {
  double lhs = 0.0;
  double standard_bound = 0.0;
  double paper_bound = 0.0;
};
JensenWeightsGap jensen_gap_weights(const ClusterHead& head, const Vector& z, double tau);

/// Sample-average bound for a single cluster weight.
/// lhs = (1/N) sum_j exp(z_j.w / tau) >= bound = exp(z_bar.w / tau).
struct JensenSamplesGap {
  double lhs = 0.0;
  double bound = 0.0;
};
JensenSamplesGap jensen_gap_samples(const EmbeddingBatch& z_all, const Vector& w, double tau);

/// Encode x with the frozen teacher and apply the selected strategy at
/// tau_teacher.
PosteriorMatrix teacher_distribution(const TeacherState& state, NormalizationStrategy strategy,
                                     const Matrix& x_batch);

}  // namespace klab
