#include "klab/synthdata.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace klab {

void MixtureSpec::validate() const {
  if (k_true < 1) throw InvalidParameterError("MixtureSpec: k_true must be >= 1");
  if (input_dim < 1) throw InvalidParameterError("MixtureSpec: input_dim must be >= 1");
  if (means.rows() != k_true || means.cols() != input_dim)
    throw ShapeError("MixtureSpec: means must be k_true x input_dim");
  if (!(sigma >= 0.0)) throw InvalidParameterError("MixtureSpec: sigma must be >= 0");
  if (weights.size() != k_true) throw ShapeError("MixtureSpec: weights length != k_true");
  if (weights.minCoeff() < 0.0)
    throw InvalidDistributionError("MixtureSpec: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw InvalidDistributionError("MixtureSpec: weights must sum to 1");
  for (int a = 0; a < k_true; ++a)
    for (int b = a + 1; b < k_true; ++b)
      if ((means.row(a) - means.row(b)).norm() < 1e-9)
        throw InvalidParameterError("MixtureSpec: duplicate cluster means");
}

void AugmentationSpec::validate() const {
  if (!(noise_sigma >= 0.0))
    throw InvalidParameterError("AugmentationSpec: noise_sigma must be >= 0");
  if (rotation_angle_max < 0.0 || rotation_angle_max > M_PI / 8.0 + 1e-12)
    throw InvalidParameterError("AugmentationSpec: rotation_angle_max outside [0, pi/8]");
}

Matrix random_separated_means(int k, int dim, double min_angle_rad, SplitMix64& rng) {
  if (k < 1 || dim < 1) throw InvalidParameterError("random_separated_means: bad k/dim");
  if (k == 1) {
    Matrix m = gaussian_matrix(1, dim, rng);
    return l2_normalize_rows(m);
  }
  const double cos_min = std::cos(min_angle_rad);
  Matrix means(k, dim);
  constexpr int kMaxTries = 100000;
  int placed = 0;
  for (int tries = 0; placed < k; ++tries) {
    if (tries > kMaxTries)
      throw InvalidParameterError(
          "random_separated_means: could not place means at the requested separation");
    Vector cand = l2_normalize(gaussian_matrix(1, dim, rng).row(0).transpose());
    bool ok = true;
    for (int j = 0; j < placed; ++j)
      if (means.row(j).dot(cand.transpose()) > cos_min) { ok = false; break; }
    if (ok) means.row(placed++) = cand.transpose();
  }
  return means;
}

LabeledDataset sample_mixture(const MixtureSpec& spec, int n, SplitMix64& rng) {
  spec.validate();
  if (n < spec.k_true)
    throw InsufficientSamplesError("sample_mixture: n < k_true");

  // CDF inversion for the labels, then mean + sigma * N(0, I).
  Vector cdf(spec.k_true);
  double acc = 0.0;
  for (int y = 0; y < spec.k_true; ++y) {
    acc += spec.weights(y);
    cdf(y) = acc;
  }
  cdf(spec.k_true - 1) = 1.0;

  LabeledDataset ds;
  ds.spec = spec;
  ds.seed = rng.seed();
  ds.samples.resize(n, spec.input_dim);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int y = 0;
    while (y < spec.k_true - 1 && u >= cdf(y)) ++y;
    ds.labels[static_cast<std::size_t>(i)] = y;
    for (int d = 0; d < spec.input_dim; ++d)
      ds.samples(i, d) = spec.means(y, d) + spec.sigma * rng.normal();
  }
  return ds;
}

Vector augment(const Vector& x, const AugmentationSpec& aug, SplitMix64& rng) {
  aug.validate();
  if (!x.allFinite()) throw InvalidInputError("augment: non-finite input");
  const Eigen::Index d = x.size();
  Vector out = x;

  if (aug.rotation_angle_max > 0.0 && d >= 2) {
    // Random 2-plane via Gram-Schmidt on two Gaussian draws; exact isometry.
    Vector u = gaussian_matrix(1, d, rng).row(0).transpose();
    Vector v = gaussian_matrix(1, d, rng).row(0).transpose();
    u = l2_normalize(u);
    v -= u * u.dot(v);
    if (v.norm() > 1e-9) {
      v = l2_normalize(v);
      const double theta = rng.uniform(-aug.rotation_angle_max, aug.rotation_angle_max);
      const double a = u.dot(out);
      const double b = v.dot(out);
      out += (std::cos(theta) - 1.0) * (a * u + b * v) + std::sin(theta) * (a * v - b * u);
    }
  }
  if (aug.noise_sigma > 0.0)
    for (Eigen::Index i = 0; i < d; ++i) out(i) += aug.noise_sigma * rng.normal();
  return out;
}

Matrix augment_batch(const Matrix& x, const AugmentationSpec& aug, const SplitMix64& rng) {
  Matrix out(x.rows(), x.cols());
  parallel_for_rows(x.rows(), [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i) {
      SplitMix64 row_rng = rng.split(static_cast<std::uint64_t>(i));
      out.row(i) = augment(x.row(i).transpose(), aug, row_rng).transpose();
    }
  });
  return out;
}

void write_dataset_csv(const std::string& path, const Matrix& samples,
                       const std::vector<int>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != samples.rows())
    throw ShapeError("write_dataset_csv: labels/samples length mismatch");
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_dataset_csv: cannot open " + path);
  for (Eigen::Index d = 0; d < samples.cols(); ++d) out << "x" << d << ",";
  out << "label\n";
  char buf[32];
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index d = 0; d < samples.cols(); ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", samples(i, d));
      out << buf << ",";
    }
    out << labels[static_cast<std::size_t>(i)] << "\n";
  }
}

CsvDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInputError("read_dataset_csv: empty file");
  Eigen::Index dim = 0;
  {
    std::stringstream hs(line);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col == "label") break;
      ++dim;
    }
  }
  if (dim == 0) throw InvalidInputError("read_dataset_csv: no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    for (Eigen::Index d = 0; d < dim; ++d) {
      if (!std::getline(ls, cell, ','))
        throw InvalidInputError("read_dataset_csv: short row");
      values.push_back(std::stod(cell));
    }
    if (!std::getline(ls, cell, ','))
      throw InvalidInputError("read_dataset_csv: missing label");
    labels.push_back(std::stoi(cell));
  }
  CsvDataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(labels.size());
  ds.samples.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index d = 0; d < dim; ++d)
      ds.samples(i, d) = values[static_cast<std::size_t>(i * dim + d)];
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace klab
