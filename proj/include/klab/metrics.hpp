#pragma once

// Quantitative probes for collapse, cluster recovery and approximation
// quality, plus the per-epoch CSV record.

#include <iosfwd>
#include <string>
#include <vector>

#include "klab/objectives.hpp"

namespace klab {

/// entropy(priors); ln K signals perfectly uniform occupancy.
double prior_entropy(const Vector& priors);

/// exp(prior_entropy): perplexity of the occupancy distribution, in [1, K].
double effective_clusters(const Vector& priors);

/// Normalized mutual information with arithmetic-mean normalization,
/// 2 I(a;b) / (H(a) + H(b)), in [0, 1]. Two constant labelings score 1.
double nmi(const std::vector<int>& labels_true, const std::vector<int>& labels_pred);

/// Fraction of rows whose argmax agrees, with the mean per-row K-L divergence
/// recorded alongside.
struct AgreementReport {
  double argmax_agreement = 0.0;
  double mean_row_kl = 0.0;
};
AgreementReport strategy_agreement(const PosteriorMatrix& p_a, const PosteriorMatrix& p_b);

/// One row of the run trace. prior_entropy/effective_clusters are measured on
/// the active-strategy teacher distribution (the supervisory signal);
/// strategy_agreement compares the inverse_prior and centering distributions
/// derived from the same teacher state; jensen_gap_mean is the mean
/// log-domain sample-side gap over clusters.
struct EpochMetrics {
  int epoch = 0;
  double prior_entropy = 0.0;
  double effective_clusters = 0.0;
  double nmi = 0.0;
  double kl_teacher_student = 0.0;
  double jensen_gap_mean = 0.0;
  ObjectiveBreakdown objective;
  double strategy_agreement = 0.0;
};

/// Fixed CSV column order shared by every run.
std::string metrics_csv_header();
void append_metrics_csv(std::ostream& out, const EpochMetrics& m);

}  // namespace klab
