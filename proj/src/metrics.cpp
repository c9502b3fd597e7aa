#include "klab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace klab {

double prior_entropy(const Vector& priors) { return entropy(priors); }

double effective_clusters(const Vector& priors) {
  return std::exp(entropy(priors));
}

double nmi(const std::vector<int>& labels_true, const std::vector<int>& labels_pred) {
  if (labels_true.size() != labels_pred.size())
    throw ShapeError("nmi: label vectors differ in length");
  if (labels_true.empty()) throw InvalidInputError("nmi: empty labelings");
  const auto relabel = [](const std::vector<int>& in, std::vector<int>& out) {
    std::vector<int> ids(in);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i)
      out[i] = static_cast<int>(
          std::lower_bound(ids.begin(), ids.end(), in[i]) - ids.begin());
    return static_cast<int>(ids.size());
  };
  std::vector<int> a, b;
  const int ka = relabel(labels_true, a);
  const int kb = relabel(labels_pred, b);
  const double n = static_cast<double>(a.size());

  Matrix joint = Matrix::Zero(ka, kb);
  for (std::size_t i = 0; i < a.size(); ++i)
    joint(a[i], b[i]) += 1.0 / n;
  const Vector pa = joint.rowwise().sum();
  const Vector pb = joint.colwise().sum().transpose();

  double mi = 0.0, ha = 0.0, hb = 0.0;
  for (int i = 0; i < ka; ++i)
    if (pa(i) > 0.0) ha -= pa(i) * std::log(pa(i));
  for (int j = 0; j < kb; ++j)
    if (pb(j) > 0.0) hb -= pb(j) * std::log(pb(j));
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j)
      if (joint(i, j) > 0.0)
        mi += joint(i, j) * std::log(joint(i, j) / (pa(i) * pb(j)));

  if (ha + hb == 0.0) return 1.0;  // both constant: identical partitions
  return std::clamp(2.0 * mi / (ha + hb), 0.0, 1.0);
}

AgreementReport strategy_agreement(const PosteriorMatrix& p_a, const PosteriorMatrix& p_b) {
  if (p_a.rows() != p_b.rows() || p_a.cols() != p_b.cols())
    throw ShapeError("strategy_agreement: shape mismatch");
  if (p_a.rows() == 0) throw InvalidInputError("strategy_agreement: empty matrices");
  AgreementReport rep;
  Eigen::Index agree = 0;
  for (Eigen::Index i = 0; i < p_a.rows(); ++i) {
    Eigen::Index ia = 0, ib = 0;
    p_a.row(i).maxCoeff(&ia);
    p_b.row(i).maxCoeff(&ib);
    if (ia == ib) ++agree;
  }
  rep.argmax_agreement = static_cast<double>(agree) / static_cast<double>(p_a.rows());
  rep.mean_row_kl = kl_divergence(p_a, p_b) / static_cast<double>(p_a.rows());
  return rep;
}

std::string metrics_csv_header() {
  return "epoch,prior_entropy,effective_clusters,nmi,kl_teacher_student,"
         "jensen_gap_mean,obj_kl_term,obj_cross_entropy_term,"
         "obj_entropy_regularizer_term,obj_sum_to_one_penalty,obj_total,"
         "strategy_agreement";
}

void append_metrics_csv(std::ostream& out, const EpochMetrics& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                m.epoch, m.prior_entropy, m.effective_clusters, m.nmi,
                m.kl_teacher_student, m.jensen_gap_mean, m.objective.kl_term,
                m.objective.cross_entropy_term, m.objective.entropy_regularizer_term,
                m.objective.sum_to_one_penalty, m.objective.total, m.strategy_agreement);
  out << buf << "\n";
}

}  // namespace klab
