#include "klab/teacher.hpp"

#include <cmath>

namespace klab {

NormalizationStrategy parse_strategy(const std::string& name) {
  if (name == "none") return NormalizationStrategy::none;
  if (name == "inverse_prior") return NormalizationStrategy::inverse_prior;
  if (name == "centering") return NormalizationStrategy::centering;
  throw InvalidParameterError("unknown strategy: " + name +
                              " (expected none|inverse_prior|centering)");
}

std::string strategy_name(NormalizationStrategy s) {
  switch (s) {
    case NormalizationStrategy::none: return "none";
    case NormalizationStrategy::inverse_prior: return "inverse_prior";
    case NormalizationStrategy::centering: return "centering";
  }
  throw InvalidParameterError("strategy_name: bad enum value");
}

void TemperatureConfig::validate() const {
  if (!(tau_teacher > 0.0) || !(tau_student > 0.0))
    throw InvalidParameterError("TemperatureConfig: temperatures must be positive");
  if (!(cos_threshold > 0.0) || !(cos_threshold < 1.0))
    throw InvalidParameterError("TemperatureConfig: cos_threshold must be in (0,1)");
  if (!(boundary_prob > 0.0) || !(boundary_prob < 1.0))
    throw InvalidParameterError("TemperatureConfig: boundary_prob must be in (0,1)");
}

void TeacherState::validate() const {
  params.validate();
  head.validate();
  if (priors.size() != head.k()) throw ShapeError("TeacherState: priors length != K");
  if (std::abs(priors.sum() - 1.0) > 1e-9)
    throw InvalidDistributionError("TeacherState: priors must sum to 1");
  if (center.size() != head.embed_dim())
    throw ShapeError("TeacherState: center dim mismatch");
  if (!(tau_teacher > 0.0))
    throw InvalidParameterError("TeacherState: tau_teacher must be positive");
}

Vector estimate_priors(const PosteriorMatrix& q_or_p) {
  if (q_or_p.rows() == 0 || q_or_p.cols() == 0)
    throw InvalidInputError("estimate_priors: empty matrix");
  return q_or_p.colwise().mean().transpose();
}

PosteriorMatrix inverse_prior_normalize(const PosteriorMatrix& p, const Vector& priors,
                                        double floor) {
  if (priors.size() != p.cols())
    throw ShapeError("inverse_prior_normalize: priors length != columns");
  if (!(floor > 0.0))
    throw InvalidParameterError("inverse_prior_normalize: floor must be positive");
  Vector scale(priors.size());
  for (Eigen::Index y = 0; y < priors.size(); ++y)
    scale(y) = 1.0 / std::max(priors(y), floor);
  PosteriorMatrix out(p.rows(), p.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    out.row(i) = p.row(i).cwiseProduct(scale.transpose());
    const double s = out.row(i).sum();
    if (!(s > 0.0))
      throw NormalizationError("inverse_prior_normalize: all-zero row after scaling");
    out.row(i) /= s;
  }
  return out;
}

PosteriorMatrix centering_normalize(const ClusterHead& head, const EmbeddingBatch& z,
                                    const Vector& center, double tau_t) {
  if (center.size() != z.cols())
    throw ShapeError("centering_normalize: center dim mismatch");
  if (z.cols() != head.weights.cols())
    throw ShapeError("centering_normalize: embedding dim mismatch");
  const Matrix logits =
      (z.rowwise() - center.transpose()) * head.weights.transpose();
  return row_softmax(logits, tau_t);
}

Vector update_center(const EmbeddingBatch& z_all, const Vector& old_center,
                     double momentum) {
  if (momentum < 0.0 || momentum > 1.0)
    throw InvalidParameterError("update_center: momentum outside [0,1]");
  if (z_all.rows() == 0) throw InvalidInputError("update_center: empty batch");
  if (old_center.size() != z_all.cols())
    throw ShapeError("update_center: center dim mismatch");
  return momentum * old_center +
         (1.0 - momentum) * z_all.colwise().mean().transpose();
}

TeacherState ema_update(const TeacherState& teacher, const EncoderParams& student_params,
                        const ClusterHead& student_head, double momentum) {
  if (momentum < 0.0 || momentum > 1.0)
    throw InvalidParameterError("ema_update: momentum outside [0,1]");
  if (teacher.params.layers.size() != student_params.layers.size())
    throw ShapeError("ema_update: layer count mismatch");
  TeacherState next = teacher;
  for (std::size_t l = 0; l < next.params.layers.size(); ++l) {
    const auto& t = teacher.params.layers[l];
    const auto& s = student_params.layers[l];
    if (t.weight.rows() != s.weight.rows() || t.weight.cols() != s.weight.cols())
      throw ShapeError("ema_update: layer shape mismatch");
    next.params.layers[l].weight = momentum * t.weight + (1.0 - momentum) * s.weight;
    next.params.layers[l].bias = momentum * t.bias + (1.0 - momentum) * s.bias;
  }
  if (teacher.head.weights.rows() != student_head.weights.rows() ||
      teacher.head.weights.cols() != student_head.weights.cols())
    throw ShapeError("ema_update: head shape mismatch");
  next.head.weights =
      momentum * teacher.head.weights + (1.0 - momentum) * student_head.weights;
  next.head.renormalize_rows();
  return next;
}

double calibrate_teacher_temperature(const TemperatureConfig& cfg, int k) {
  cfg.validate();
  const double s = cfg.cos_threshold;
  const double p = cfg.boundary_prob;
  if (k <= 2 && p == 0.5)
    throw DegenerateCalibrationError(
        "calibrate_teacher_temperature: k <= 2 with boundary_prob 0.5 has no solution");
  const double ratio = (static_cast<double>(k) - 1.0) * p / (1.0 - p);
  if (ratio <= 1.0)
    throw NoPositiveSolutionError(
        "calibrate_teacher_temperature: (k-1) p / (1-p) <= 1, no positive temperature");
  return s / std::log(ratio);
}

JensenWeightsGap jensen_gap_weights(const ClusterHead& head, const Vector& z, double tau) {
  if (z.size() != head.weights.cols())
    throw ShapeError("jensen_gap_weights: embedding dim mismatch");
  if (!(tau > 0.0)) throw InvalidParameterError("jensen_gap_weights: tau <= 0");
  const double k = static_cast<double>(head.k());
  JensenWeightsGap g;
  const Vector sims = head.weights * z;
  g.lhs = (sims / tau).array().exp().sum();
  const double mean_sim = z.dot(head.mean_weight());
  g.standard_bound = k * std::exp(mean_sim / tau);
  g.paper_bound = std::exp(k * mean_sim / tau);
  return g;
}

JensenSamplesGap jensen_gap_samples(const EmbeddingBatch& z_all, const Vector& w,
                                    double tau) {
  if (w.size() != z_all.cols())
    throw ShapeError("jensen_gap_samples: embedding dim mismatch");
  if (!(tau > 0.0)) throw InvalidParameterError("jensen_gap_samples: tau <= 0");
  if (z_all.rows() == 0) throw InvalidInputError("jensen_gap_samples: empty batch");
  JensenSamplesGap g;
  const Vector sims = z_all * w;
  g.lhs = (sims / tau).array().exp().mean();
  const double mean_sim = z_all.colwise().mean().dot(w.transpose());
  g.bound = std::exp(mean_sim / tau);
  return g;
}

PosteriorMatrix teacher_distribution(const TeacherState& state,
                                     NormalizationStrategy strategy,
                                     const Matrix& x_batch) {
  const EmbeddingBatch z = encode(state.params, x_batch);
  switch (strategy) {
    case NormalizationStrategy::none:
      return student_posterior(state.head, z, state.tau_teacher);
    case NormalizationStrategy::inverse_prior: {
      const PosteriorMatrix raw = student_posterior(state.head, z, state.tau_teacher);
      return inverse_prior_normalize(raw, state.priors);
    }
    case NormalizationStrategy::centering:
      return centering_normalize(state.head, z, state.center, state.tau_teacher);
  }
  throw InvalidParameterError("teacher_distribution: bad strategy enum");
}

}  // namespace klab
