#pragma once

#include <cstdint>

#include "gqe/point_cloud.hpp"

namespace gqe {

// Luma coefficients of a full-range YCbCr transform. Defaults are BT.709.
struct ColorMatrix {
  double kr = 0.2126;
  double kb = 0.0722;

  static ColorMatrix bt709() { return {}; }
  static ColorMatrix bt601() { return {0.299, 0.114}; }
};

// Round half away from zero, then clamp to [0, 255].
double round_clamp_8bit(double v) noexcept;
std::uint8_t to_u8(double v) noexcept;

PointCloud rgb_to_ycbcr(const PointCloud& pc, const ColorMatrix& m = {});
PointCloud ycbcr_to_rgb(const PointCloud& pc, const ColorMatrix& m = {});

}  // namespace gqe
