#include "gqe/color.hpp"

#include <algorithm>
#include <cmath>

#include "gqe/error.hpp"

namespace gqe {

double round_clamp_8bit(double v) noexcept { return std::clamp(std::round(v), 0.0, 255.0); }

std::uint8_t to_u8(double v) noexcept { return static_cast<std::uint8_t>(round_clamp_8bit(v)); }

PointCloud rgb_to_ycbcr(const PointCloud& pc, const ColorMatrix& m) {
  if (pc.color_space != ColorSpace::RGB8) throw Error(ErrorCode::WrongColorSpace, "rgb_to_ycbcr expects RGB8");
  const double kg = 1.0 - m.kr - m.kb;
  const double cb_div = 2.0 * (1.0 - m.kb);
  const double cr_div = 2.0 * (1.0 - m.kr);
  PointCloud out = pc;
  out.color_space = ColorSpace::YCbCr8;
  for (auto& c : out.colors) {
    const double r = c[0], g = c[1], b = c[2];
    const double y = m.kr * r + kg * g + m.kb * b;
    c = {round_clamp_8bit(y), round_clamp_8bit((b - y) / cb_div + 128.0),
         round_clamp_8bit((r - y) / cr_div + 128.0)};
  }
  return out;
}

PointCloud ycbcr_to_rgb(const PointCloud& pc, const ColorMatrix& m) {
  if (pc.color_space != ColorSpace::YCbCr8) throw Error(ErrorCode::WrongColorSpace, "ycbcr_to_rgb expects YCbCr8");
  const double kg = 1.0 - m.kr - m.kb;
  const double cb_mul = 2.0 * (1.0 - m.kb);
  const double cr_mul = 2.0 * (1.0 - m.kr);
  PointCloud out = pc;
  out.color_space = ColorSpace::RGB8;
  for (auto& c : out.colors) {
    const double y = c[0], cb = c[1] - 128.0, cr = c[2] - 128.0;
    const double r = y + cr_mul * cr;
    const double b = y + cb_mul * cb;
    const double g = (y - m.kr * r - m.kb * b) / kg;
    c = {round_clamp_8bit(r), round_clamp_8bit(g), round_clamp_8bit(b)};
  }
  return out;
}

}  // namespace gqe
