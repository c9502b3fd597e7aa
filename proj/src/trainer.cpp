#include "klab/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

namespace klab {

namespace {

constexpr double kDivergenceLossLimit = 1e6;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void TrainSchedule::validate() const {
  if (epochs_total < 0) throw InvalidParameterError("TrainSchedule: epochs_total < 0");
  if (n_e < 1) throw InvalidParameterError("TrainSchedule: n_e must be >= 1");
  if (batch_size < 1) throw InvalidParameterError("TrainSchedule: batch_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw InvalidParameterError("TrainSchedule: learning_rate must be positive");
  if (ema_momentum < 0.0 || ema_momentum > 1.0)
    throw InvalidParameterError("TrainSchedule: ema_momentum outside [0,1]");
  if (center_momentum < 0.0 || center_momentum > 1.0)
    throw InvalidParameterError("TrainSchedule: center_momentum outside [0,1]");
}

double RunConfig::collapse_threshold() const {
  return std::max(2.0, collapse_fraction * static_cast<double>(k_model));
}

void RunConfig::validate() const {
  mixture.validate();
  augmentation.validate();
  temperatures.validate();
  schedule.validate();
  if (n_train < mixture.k_true)
    throw InvalidParameterError("RunConfig: n_train < k_true");
  if (schedule.batch_size > n_train)
    throw InvalidParameterError("RunConfig: batch_size > n_train");
  if (k_model < 2) throw InvalidParameterError("RunConfig: k_model must be >= 2");
  if (embed_dim < 1) throw InvalidParameterError("RunConfig: embed_dim must be >= 1");
  if (collapse_patience < 1)
    throw InvalidParameterError("RunConfig: collapse_patience must be >= 1");
  if (collapse_fraction < 0.0 || collapse_fraction > 1.0)
    throw InvalidParameterError("RunConfig: collapse_fraction outside [0,1]");
}

double student_step(EncoderParams& params, ClusterHead& head,
                    const PosteriorMatrix& teacher_q, const Matrix& x_batch,
                    const AugmentationSpec& aug, const SplitMix64& aug_rng, double lr,
                    double tau_s) {
  if (lr < 0.0) throw InvalidParameterError("student_step: negative learning rate");
  const Matrix views = augment_batch(x_batch, aug, aug_rng);
  const LossAndGradient lg =
      cross_entropy_loss_and_gradient(params, head, views, teacher_q, tau_s);
  if (!std::isfinite(lg.loss) || lg.loss > kDivergenceLossLimit)
    throw DivergenceError("student_step: loss diverged");

  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    params.layers[l].weight -= lr * lg.gradient.d_encoder[l].weight;
    params.layers[l].bias -= lr * lg.gradient.d_encoder[l].bias;
  }
  head.weights -= lr * lg.gradient.d_cluster_weights;
  head.renormalize_rows();
  return lg.loss;
}

RefreshOutputs teacher_refresh(const TeacherState& teacher, const EncoderParams& student,
                               const ClusterHead& student_head, const Matrix& full_x,
                               NormalizationStrategy strategy, double ema_momentum,
                               double center_momentum) {
  RefreshOutputs out;
  out.state = ema_update(teacher, student, student_head, ema_momentum);
  out.embeddings = encode(out.state.params, full_x);
  out.state.center = update_center(out.embeddings, teacher.center, center_momentum);
  out.raw = student_posterior(out.state.head, out.embeddings, out.state.tau_teacher);
  out.state.priors = estimate_priors(out.raw);
  switch (strategy) {
    case NormalizationStrategy::none:
      out.q_active = out.raw;
      break;
    case NormalizationStrategy::inverse_prior:
      out.q_active = inverse_prior_normalize(out.raw, out.state.priors);
      break;
    case NormalizationStrategy::centering:
      out.q_active = centering_normalize(out.state.head, out.embeddings,
                                         out.state.center, out.state.tau_teacher);
      break;
  }
  return out;
}

Trainer::Trainer(const RunConfig& config)
    : Trainer(config, [&config] {
        SplitMix64 root(config.seed);
        SplitMix64 data_rng = root.split(streams::data);
        return sample_mixture(config.mixture, config.n_train, data_rng);
      }()) {}

Trainer::Trainer(const RunConfig& config, LabeledDataset dataset)
    : config_(config),
      dataset_(std::move(dataset)),
      shuffle_rng_(SplitMix64(config.seed).split(streams::shuffle)),
      aug_root_(SplitMix64(config.seed).split(streams::augment)) {
  config_.validate();
  SplitMix64 root(config_.seed);
  SplitMix64 enc_rng = root.split(streams::encoder_init);
  SplitMix64 head_rng = root.split(streams::head_init);
  student_params_ = make_encoder(config_.mixture.input_dim, config_.hidden_dims,
                                 config_.embed_dim, enc_rng);
  student_head_ = make_cluster_head(config_.k_model, config_.embed_dim, head_rng);

  teacher_.params = student_params_;
  teacher_.head = student_head_;
  teacher_.priors = Vector::Constant(config_.k_model, 1.0 / config_.k_model);
  teacher_.center = Vector::Zero(config_.embed_dim);
  teacher_.tau_teacher = config_.temperatures.tau_teacher;

  const PosteriorMatrix p0 = student_posterior(
      student_head_, encode(student_params_, dataset_.samples),
      config_.temperatures.tau_student);
  report_.initial_nmi = nmi(dataset_.labels, argmax_rows(p0));
  start_time_ = now_seconds();
}

void Trainer::refresh_teacher() {
  RefreshOutputs out = teacher_refresh(teacher_, student_params_, student_head_,
                                       dataset_.samples, config_.strategy,
                                       config_.schedule.ema_momentum,
                                       config_.schedule.center_momentum);
  teacher_ = std::move(out.state);
  teacher_embeddings_ = std::move(out.embeddings);
  teacher_raw_ = std::move(out.raw);
  teacher_q_ = std::move(out.q_active);

  report_.refreshes.push_back({epoch_, teacher_.priors, teacher_.center});

  const double eff = effective_clusters(estimate_priors(teacher_q_));
  if (eff < config_.collapse_threshold())
    ++collapse_streak_;
  else
    collapse_streak_ = 0;
  if (collapse_streak_ >= config_.collapse_patience) report_.collapsed = true;
}

EpochMetrics Trainer::compute_epoch_metrics(int epoch) const {
  EpochMetrics m;
  m.epoch = epoch;

  const PosteriorMatrix p_student = student_posterior(
      student_head_, encode(student_params_, dataset_.samples),
      config_.temperatures.tau_student);
  m.nmi = nmi(dataset_.labels, argmax_rows(p_student));
  m.kl_teacher_student = kl_divergence(teacher_q_, p_student);
  m.objective = regularized_objective(teacher_q_, p_student);

  const Vector active_priors = estimate_priors(teacher_q_);
  m.prior_entropy = prior_entropy(active_priors);
  m.effective_clusters = effective_clusters(active_priors);

  // Mean log-domain sample-side Jensen gap over clusters, on the frozen
  // teacher's cached embeddings.
  const double tau_t = teacher_.tau_teacher;
  const Matrix sims = teacher_embeddings_ * teacher_.head.weights.transpose();
  const Vector mean_embedding = teacher_embeddings_.colwise().mean().transpose();
  double gap_acc = 0.0;
  const double log_n = std::log(static_cast<double>(teacher_embeddings_.rows()));
  for (Eigen::Index y = 0; y < sims.cols(); ++y) {
    const double lse = log_sum_exp((sims.col(y) / tau_t).eval());
    gap_acc += (lse - log_n) - mean_embedding.dot(teacher_.head.weights.row(y)) / tau_t;
  }
  m.jensen_gap_mean = gap_acc / static_cast<double>(sims.cols());

  // Closeness of the two normalization strategies at the current teacher.
  const PosteriorMatrix q_ip = inverse_prior_normalize(teacher_raw_, teacher_.priors);
  const PosteriorMatrix q_ct = centering_normalize(teacher_.head, teacher_embeddings_,
                                                   teacher_.center, tau_t);
  m.strategy_agreement = strategy_agreement(q_ip, q_ct).argmax_agreement;
  return m;
}

void Trainer::run_epoch() {
  if (report_.diverged) return;
  if (epoch_ % config_.schedule.n_e == 0) refresh_teacher();

  const int n = static_cast<int>(dataset_.samples.rows());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(shuffle_rng_.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }

  const SplitMix64 epoch_aug = aug_root_.split(static_cast<std::uint64_t>(epoch_));
  const int batch = config_.schedule.batch_size;
  try {
    for (int begin = 0, batch_index = 0; begin < n; begin += batch, ++batch_index) {
      const int size = std::min(batch, n - begin);
      Matrix x(size, dataset_.samples.cols());
      PosteriorMatrix q(size, teacher_q_.cols());
      for (int r = 0; r < size; ++r) {
        const int src = order[static_cast<std::size_t>(begin + r)];
        x.row(r) = dataset_.samples.row(src);
        q.row(r) = teacher_q_.row(src);
      }
      student_step(student_params_, student_head_, q, x, config_.augmentation,
                   epoch_aug.split(static_cast<std::uint64_t>(batch_index)),
                   config_.schedule.learning_rate, config_.temperatures.tau_student);
    }
  } catch (const DivergenceError&) {
    report_.diverged = true;
    report_.divergence_epoch = epoch_;
    ++epoch_;
    return;
  }

  report_.metrics.push_back(compute_epoch_metrics(epoch_));
  ++epoch_;
}

RunOutcome Trainer::finish() && {
  report_.wall_clock_seconds = now_seconds() - start_time_;
  RunOutcome out;
  out.report = std::move(report_);
  out.encoder = std::move(student_params_);
  out.head = std::move(student_head_);
  out.teacher = std::move(teacher_);
  out.dataset = std::move(dataset_);
  return out;
}

RunOutcome run(const RunConfig& config) {
  Trainer trainer(config);
  for (int e = 0; e < config.schedule.epochs_total && !trainer.diverged(); ++e)
    trainer.run_epoch();
  return std::move(trainer).finish();
}

CompareReport compare_strategies(const RunConfig& config) {
  RunConfig cfg_ip = config;
  cfg_ip.strategy = NormalizationStrategy::inverse_prior;
  RunConfig cfg_ct = config;
  cfg_ct.strategy = NormalizationStrategy::centering;

  SplitMix64 root(config.seed);
  SplitMix64 data_rng = root.split(streams::data);
  const LabeledDataset dataset = sample_mixture(config.mixture, config.n_train, data_rng);

  SplitMix64 probe_rng = root.split(streams::probe);
  const int n_probe = std::min(512, config.n_train);
  const LabeledDataset probe = sample_mixture(config.mixture, n_probe, probe_rng);

  Trainer a(cfg_ip, dataset);
  Trainer b(cfg_ct, dataset);

  CompareReport rep;
  for (int e = 0; e < config.schedule.epochs_total; ++e) {
    a.run_epoch();
    b.run_epoch();
    if (a.diverged() || b.diverged()) {
      rep.diverged = true;
      break;
    }
    const PosteriorMatrix qa = teacher_distribution(
        a.teacher(), NormalizationStrategy::inverse_prior, probe.samples);
    const PosteriorMatrix qb = teacher_distribution(
        b.teacher(), NormalizationStrategy::centering, probe.samples);
    const AgreementReport agree = strategy_agreement(qa, qb);

    CompareEpoch row;
    row.epoch = e;
    row.agreement = agree.argmax_agreement;
    row.mean_row_kl = agree.mean_row_kl;
    row.nmi_inverse_prior = a.report().metrics.back().nmi;
    row.nmi_centering = b.report().metrics.back().nmi;
    row.prior_entropy_inverse_prior = a.report().metrics.back().prior_entropy;
    row.prior_entropy_centering = b.report().metrics.back().prior_entropy;
    rep.epochs.push_back(row);
  }
  if (!rep.epochs.empty()) {
    rep.final_nmi_inverse_prior = rep.epochs.back().nmi_inverse_prior;
    rep.final_nmi_centering = rep.epochs.back().nmi_centering;
  }
  return rep;
}

std::string compare_csv_header() {
  return "epoch,agreement,mean_row_kl,nmi_inverse_prior,nmi_centering,"
         "prior_entropy_inverse_prior,prior_entropy_centering";
}

void append_compare_csv(std::ostream& out, const CompareEpoch& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", row.epoch,
                row.agreement, row.mean_row_kl, row.nmi_inverse_prior, row.nmi_centering,
                row.prior_entropy_inverse_prior, row.prior_entropy_centering);
  out << buf << "\n";
}

}  // namespace klab
