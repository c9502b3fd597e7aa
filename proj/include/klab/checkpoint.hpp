#pragma once

// Versioned binary checkpoints for the encoder + cluster head.
//
// Layout (little-endian):
//   bytes 0..3   magic "KLCK"
//   u32          version (currently 1)
//   u32          layer count L
//   L times:     u32 out, u32 in, out*in f64 weight (row-major), out f64 bias
//   u32 K, u32 embed_dim, K*embed_dim f64 head rows (row-major)
//
// Doubles are written as raw IEEE-754 bytes, so a reload is bit-exact.

#include <string>

#include "klab/model.hpp"

namespace klab {

struct Checkpoint {
  EncoderParams encoder;
  ClusterHead head;
};

void save_checkpoint(const std::string& path, const EncoderParams& encoder,
                     const ClusterHead& head);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace klab
