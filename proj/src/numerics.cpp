#include "klab/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>

namespace klab {

Matrix row_softmax(const Matrix& logits, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvalidParameterError("row_softmax: tau must be positive");
  Matrix out(logits.rows(), logits.cols());
  parallel_for_rows(logits.rows(), [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index i = begin; i < end; ++i)
      out.row(i) = softmax_with_temperature(logits.row(i).transpose(), tau).transpose();
  });
  return out;
}

Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.row(i) = l2_normalize(m.row(i).transpose()).transpose();
  return out;
}

int worker_count() {
  static const int cached = [] {
    const char* env = std::getenv("KLAB_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    const long parsed = std::strtol(env, nullptr, 10);
    const long hw = std::max(1u, std::thread::hardware_concurrency());
    return static_cast<int>(std::clamp(parsed, 1l, hw));
  }();
  return cached;
}

void parallel_for_rows(Eigen::Index n,
                       const std::function<void(Eigen::Index, Eigen::Index)>& fn) {
  constexpr Eigen::Index kTile = 256;
  const int workers = worker_count();
  if (workers <= 1 || n <= kTile) {
    for (Eigen::Index begin = 0; begin < n; begin += kTile)
      fn(begin, std::min(begin + kTile, n));
    return;
  }
  const Eigen::Index tiles = (n + kTile - 1) / kTile;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  std::atomic<Eigen::Index> cursor{0};
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (Eigen::Index t = cursor.fetch_add(1); t < tiles; t = cursor.fetch_add(1)) {
        const Eigen::Index begin = t * kTile;
        fn(begin, std::min(begin + kTile, n));
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace klab
