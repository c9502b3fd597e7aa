#pragma once

// Synthetic mixture data with ground-truth labels, plus the small
// view-generating augmentation (random in-plane rotation + additive noise)
// used to feed the student.

#include <string>
#include <vector>

#include "klab/numerics.hpp"

namespace klab {

/// Isotropic Gaussian mixture on the input hypersphere.
struct MixtureSpec {
  int k_true = 0;
  int input_dim = 0;
  Matrix means;    // k_true x input_dim, unit rows
  double sigma = 0.0;
  Vector weights;  // sums to 1

  void validate() const;
};

struct LabeledDataset {
  Matrix samples;  // n x input_dim
  std::vector<int> labels;
  MixtureSpec spec;
  std::uint64_t seed = 0;
};

struct AugmentationSpec {
  double noise_sigma = 0.0;
  double rotation_angle_max = 0.0;  // radians, in [0, pi/8]

  void validate() const;
};

/// k unit vectors on the dim-sphere with pairwise angle >= min_angle_rad,
/// drawn by rejection. Default separation used by configs is 30 degrees.
Matrix random_separated_means(int k, int dim, double min_angle_rad, SplitMix64& rng);

/// Draws n labeled points: label ~ weights, x = mean_label + sigma * N(0, I).
LabeledDataset sample_mixture(const MixtureSpec& spec, int n, SplitMix64& rng);

/// One augmented view: random rotation by an angle in [-max, max] within a
/// random 2-plane, then additive N(0, noise_sigma^2 I) jitter. A zero spec is
/// the identity. Rotation is skipped for inputs of dimension < 2.
Vector augment(const Vector& x, const AugmentationSpec& aug, SplitMix64& rng);

/// Row-wise augmentation with per-sample substreams rng.split(row), so the
/// result is independent of evaluation order.
Matrix augment_batch(const Matrix& x, const AugmentationSpec& aug, const SplitMix64& rng);

// CSV round trip: header "x0,..,x{d-1},label", one sample per line.
void write_dataset_csv(const std::string& path, const Matrix& samples,
                       const std::vector<int>& labels);

struct CsvDataset {
  Matrix samples;
  std::vector<int> labels;
};

CsvDataset read_dataset_csv(const std::string& path);

}  // namespace klab
