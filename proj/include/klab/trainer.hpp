#pragma once

// Alternating-direction optimization: fix the teacher distribution Q and
// train the student by gradient descent on the cross-entropy; every n_e
// epochs refresh the teacher (EMA of parameters, full-dataset center and
// priors) and recompute Q. The teacher consumes clean views, the student
// augmented ones.

#include <optional>
#include <string>
#include <vector>

#include "klab/metrics.hpp"
#include "klab/synthdata.hpp"
#include "klab/teacher.hpp"

namespace klab {

/// Fixed RNG substream ids; every run derives its streams from the config
/// seed through these, which is what makes reports reproducible field by
/// field.
namespace streams {
constexpr std::uint64_t means = 1;
constexpr std::uint64_t data = 2;
constexpr std::uint64_t encoder_init = 3;
constexpr std::uint64_t head_init = 4;
constexpr std::uint64_t shuffle = 5;
constexpr std::uint64_t augment = 6;
constexpr std::uint64_t probe = 7;
}  // namespace streams

struct TrainSchedule {
  int epochs_total = 200;
  int n_e = 5;               // teacher refresh period, epochs
  int batch_size = 256;
  double learning_rate = 1e-3;
  double ema_momentum = 0.9;
  double center_momentum = 0.9;

  void validate() const;
};

struct RunConfig {
  MixtureSpec mixture;       // means resolved before running
  int n_train = 2048;
  AugmentationSpec augmentation;
  std::vector<int> hidden_dims = {64, 64};
  int embed_dim = 16;
  int k_model = 16;
  TemperatureConfig temperatures;
  NormalizationStrategy strategy = NormalizationStrategy::inverse_prior;
  TrainSchedule schedule;
  std::uint64_t seed = 0;
  // Collapse flag: effective_clusters of the supervisory signal below
  // max(2, collapse_fraction * K) for collapse_patience consecutive refreshes.
  double collapse_fraction = 0.05;
  int collapse_patience = 5;

  double collapse_threshold() const;
  void validate() const;
};

struct RefreshRecord {
  int epoch = 0;
  Vector priors;  // raw column-mean priors of the refreshed teacher
  Vector center;
};

struct RunReport {
  std::vector<EpochMetrics> metrics;
  std::vector<RefreshRecord> refreshes;
  double initial_nmi = 0.0;  // untrained encoder baseline, same K
  bool collapsed = false;
  bool diverged = false;
  int divergence_epoch = -1;
  double wall_clock_seconds = 0.0;  // excluded from determinism comparisons
};

struct RunOutcome {
  RunReport report;
  EncoderParams encoder;
  ClusterHead head;
  TeacherState teacher;
  LabeledDataset dataset;
};

/// One gradient-descent step of the student on a batch: augments the views,
/// computes the summed cross-entropy against the fixed teacher rows, applies
/// the exact gradient at learning rate lr and re-projects the head rows to
/// unit norm. Returns the pre-update batch loss. Raises DivergenceError on a
/// non-finite or exploding loss.
double student_step(EncoderParams& params, ClusterHead& head,
                    const PosteriorMatrix& teacher_q, const Matrix& x_batch,
                    const AugmentationSpec& aug, const SplitMix64& aug_rng, double lr,
                    double tau_s);

/// Everything a refresh produces: the new frozen teacher plus the cached
/// full-dataset quantities the following epochs reuse.
struct RefreshOutputs {
  TeacherState state;
  EmbeddingBatch embeddings;   // teacher embeddings of the full dataset
  PosteriorMatrix raw;         // plain posterior at tau_teacher
  PosteriorMatrix q_active;    // strategy-applied supervisory signal
};

/// Refresh order: (1) EMA of encoder+head, (2) encode the full dataset,
/// (3) EMA-update the center from the full-dataset mean, (4) raw posteriors
/// at tau_teacher, (5) column-mean priors, (6) strategy application.
RefreshOutputs teacher_refresh(const TeacherState& teacher, const EncoderParams& student,
                               const ClusterHead& student_head, const Matrix& full_x,
                               NormalizationStrategy strategy, double ema_momentum,
                               double center_momentum);

/// Incremental driver used by run() and compare_strategies(); owns the
/// student, the frozen teacher and the RNG streams.
class Trainer {
 public:
  explicit Trainer(const RunConfig& config);
  Trainer(const RunConfig& config, LabeledDataset dataset);

  /// Refresh if due, sweep all batches, append epoch metrics.
  /// No-op once diverged.
  void run_epoch();

  int epoch() const { return epoch_; }
  bool diverged() const { return report_.diverged; }
  const RunConfig& config() const { return config_; }
  const RunReport& report() const { return report_; }
  const LabeledDataset& dataset() const { return dataset_; }
  const EncoderParams& encoder() const { return student_params_; }
  const ClusterHead& head() const { return student_head_; }
  const TeacherState& teacher() const { return teacher_; }

  RunOutcome finish() &&;

 private:
  void refresh_teacher();
  EpochMetrics compute_epoch_metrics(int epoch) const;

  RunConfig config_;
  LabeledDataset dataset_;
  EncoderParams student_params_;
  ClusterHead student_head_;
  TeacherState teacher_;
  EmbeddingBatch teacher_embeddings_;
  PosteriorMatrix teacher_raw_;
  PosteriorMatrix teacher_q_;
  SplitMix64 shuffle_rng_;
  SplitMix64 aug_root_;
  RunReport report_;
  int epoch_ = 0;
  int collapse_streak_ = 0;
  double start_time_ = 0.0;
};

/// Full run; on divergence returns the partial report with the failure
/// marker set instead of throwing.
RunOutcome run(const RunConfig& config);

/// Lockstep runs of inverse_prior and centering on identical seeds and data,
/// comparing the two teacher distributions on a held-out probe batch.
struct CompareEpoch {
  int epoch = 0;
  double agreement = 0.0;
  double mean_row_kl = 0.0;
  double nmi_inverse_prior = 0.0;
  double nmi_centering = 0.0;
  double prior_entropy_inverse_prior = 0.0;
  double prior_entropy_centering = 0.0;
};

struct CompareReport {
  std::vector<CompareEpoch> epochs;
  double final_nmi_inverse_prior = 0.0;
  double final_nmi_centering = 0.0;
  bool diverged = false;
};

CompareReport compare_strategies(const RunConfig& config);

/// Fixed CSV column order for compare reports.
std::string compare_csv_header();
void append_compare_csv(std::ostream& out, const CompareEpoch& row);

}  // namespace klab
