#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace gqe {

enum class ColorSpace { RGB8, YCbCr8 };

// Index of a colour channel inside PointCloud::colors. In YCbCr8 the three
// channels are Y, Cb, Cr; in RGB8 they are R, G, B.
enum class Component : int { Y = 0, Cb = 1, Cr = 2 };

const char* component_name(Component c) noexcept;
Component parse_component(const char* name);

using Coord = std::array<std::int32_t, 3>;
using Color = std::array<double, 3>;

struct PointCloud {
  std::vector<Coord> coords;
  // Real-valued so enhanced (fractional) colours survive until written.
  std::vector<Color> colors;
  ColorSpace color_space = ColorSpace::RGB8;
  int geometry_bitdepth = 10;

  std::size_t size() const noexcept { return coords.size(); }

  // Throws InvalidArgument when the row counts differ, the cloud is empty,
  // or a colour is non-finite or outside [0, 255].
  void validate() const;
};

}  // namespace gqe
