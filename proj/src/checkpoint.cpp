#include "klab/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace klab {

namespace {

constexpr char kMagic[4] = {'K', 'L', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ConfigError("checkpoint: truncated file");
  return v;
}

// Row-major on disk regardless of Eigen's in-memory layout.
void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
}

Matrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      double v = 0.0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      if (!in) throw ConfigError("checkpoint: truncated matrix block");
      m(i, j) = v;
    }
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderParams& encoder,
                     const ClusterHead& head) {
  encoder.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("checkpoint: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(encoder.layers.size()));
  for (const auto& layer : encoder.layers) {
    write_u32(out, static_cast<std::uint32_t>(layer.weight.rows()));
    write_u32(out, static_cast<std::uint32_t>(layer.weight.cols()));
    write_matrix(out, layer.weight);
    write_matrix(out, layer.bias);
  }
  write_u32(out, static_cast<std::uint32_t>(head.weights.rows()));
  write_u32(out, static_cast<std::uint32_t>(head.weights.cols()));
  write_matrix(out, head.weights);
  if (!out) throw ConfigError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + path);
  char magic[4] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw ConfigError("checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kVersion)
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version));

  Checkpoint ckpt;
  const std::uint32_t layers = read_u32(in);
  ckpt.encoder.layers.resize(layers);
  for (std::uint32_t l = 0; l < layers; ++l) {
    const auto rows = static_cast<Eigen::Index>(read_u32(in));
    const auto cols = static_cast<Eigen::Index>(read_u32(in));
    ckpt.encoder.layers[l].weight = read_matrix(in, rows, cols);
    ckpt.encoder.layers[l].bias = read_matrix(in, rows, 1).col(0);
  }
  const auto k = static_cast<Eigen::Index>(read_u32(in));
  const auto d = static_cast<Eigen::Index>(read_u32(in));
  ckpt.head.weights = read_matrix(in, k, d);
  return ckpt;
}

}  // namespace klab
