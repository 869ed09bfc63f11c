#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "gsr/nn/network.hpp"

namespace gsr::nn {

// Binary checkpoint, little-endian:
//   "GSRN" | version u32 | layer count u32 | input h,w,c u32 x3 |
//   regularized layer u32 | seed u64
//   per layer: kind tag u8 | dims u32... | f64 scalars...
// Dims per kind: dense (in, out); conv2d (in_ch, out_ch, patch, stride,
// same); maxpool (patch, stride); reshape (h, w, c); leaky relu and softmax
// none. Scalars: the layer's parameter tensors row-major (weights, then
// bias); leaky relu stores its slope as a single f64.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const Network& net);
void save_checkpoint(const std::string& path, const Network& net);

/// Throws CheckpointError on malformed input and ShapeMismatch when the
/// stored layers do not compose.
Network load_checkpoint(std::istream& in);
Network load_checkpoint(const std::string& path);

}  // namespace gsr::nn
