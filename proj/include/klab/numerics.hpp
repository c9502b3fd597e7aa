#pragma once

// Low-level numerical kernels shared by every module: stable softmax,
// log-sum-exp, hypersphere normalization, and the seeded RNG. Everything is
// double precision and deterministic; matrices follow the samples-by-clusters
// (N x K) row orientation.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include "klab/errors.hpp"

namespace klab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Seeded RNG
// ---------------------------------------------------------------------------

/// SplitMix64: counter-based generator (Steele, Lea & Flood constants).
/// state_n = seed + n * 0x9E3779B97F4A7C15, output = mix(state_n), so the
/// stream is a pure function of (seed, n) and identical on every platform.
/// Substreams are derived from the root seed alone, independent of how much
/// of the parent stream has been consumed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is
  /// cached so draws come in a fixed order.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();  // log(0) guard
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection-free modulo is biased for huge n; n here is dataset-sized.
    return next() % n;
  }

  /// Derive an independent stream keyed by (root seed, stream id).
  SplitMix64 split(std::uint64_t stream) const {
    std::uint64_t z = seed_ ^ (0xD1B54A32D192ED03ull * (stream + 1));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return SplitMix64(z ^ (z >> 31));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Matrix of iid standard normals, filled row-major so the draw order is part
/// of the documented stream.
inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, SplitMix64& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
  return m;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

namespace detail {
constexpr double kNormEps = 1e-12;
}

/// log(sum_i exp(v_i)), overflow-safe via max subtraction.
template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& values) {
  if (values.size() == 0) throw InvalidInputError("log_sum_exp: empty vector");
  if (!values.allFinite()) throw InvalidInputError("log_sum_exp: non-finite entry");
  const double m = values.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) acc += std::exp(values(i) - m);
  return m + std::log(acc);
}

/// softmax(v / tau) with max subtraction; output sums to 1.
template <typename Derived>
Vector softmax_with_temperature(const Eigen::MatrixBase<Derived>& logits, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvalidParameterError("softmax_with_temperature: tau must be positive");
  if (logits.size() == 0) throw InvalidInputError("softmax_with_temperature: empty logits");
  if (!logits.allFinite())
    throw InvalidInputError("softmax_with_temperature: non-finite logit");
  const double m = logits.maxCoeff();
  Vector out(logits.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    out(i) = std::exp((logits(i) - m) / tau);
    sum += out(i);
  }
  out /= sum;
  return out;
}

/// v / ||v||; rejects near-zero input.
template <typename Derived>
Vector l2_normalize(const Eigen::MatrixBase<Derived>& v) {
  const double n = v.norm();
  if (!(n > detail::kNormEps))
    throw DegenerateVectorError("l2_normalize: vector norm below 1e-12");
  return v / n;
}

/// Row-wise softmax at temperature tau (each row of `logits` independently).
Matrix row_softmax(const Matrix& logits, double tau);

/// Row-wise l2 normalization; rejects any near-zero row.
Matrix l2_normalize_rows(const Matrix& m);

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

/// Worker count bounded by the KLAB_THREADS environment variable (default 1).
int worker_count();

/// Runs fn(begin, end) over fixed 256-row tiles of [0, n). Tiles are disjoint
/// and the tile grid does not depend on the worker count, so any computation
/// with per-row outputs (or per-tile partials reduced in tile order) is
/// bit-identical for every KLAB_THREADS setting.
void parallel_for_rows(Eigen::Index n, const std::function<void(Eigen::Index, Eigen::Index)>& fn);

}  // namespace klab
