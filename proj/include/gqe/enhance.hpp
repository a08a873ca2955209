#pragma once

#include <array>

#include "gqe/checkpoint.hpp"
#include "gqe/color.hpp"

namespace gqe {

struct EnhanceOptions {
  std::size_t workers = 1;
  ColorMatrix matrix;
};

// Runs one component model over a YCbCr8 cloud and returns the cloud with
// that channel replaced by the patch-averaged network output.
PointCloud enhance_component(const Checkpoint& ckpt, const PointCloud& ycbcr, const EnhanceOptions& opts = {});

// Full filter: convert to YCbCr if needed, enhance Y, Cb and Cr with their
// models (indexed by Component), convert back to the input colour space.
PointCloud enhance(const std::array<const Checkpoint*, 3>& ckpts, const PointCloud& input,
                   const EnhanceOptions& opts = {});

}  // namespace gqe
