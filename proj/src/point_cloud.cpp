#include "gqe/point_cloud.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "gqe/error.hpp"

namespace gqe {

const char* component_name(Component c) noexcept {
  switch (c) {
    case Component::Y: return "Y";
    case Component::Cb: return "Cb";
    case Component::Cr: return "Cr";
  }
  return "?";
}

Component parse_component(const char* name) {
  if (std::strcmp(name, "Y") == 0 || std::strcmp(name, "y") == 0) return Component::Y;
  if (std::strcmp(name, "Cb") == 0 || std::strcmp(name, "cb") == 0) return Component::Cb;
  if (std::strcmp(name, "Cr") == 0 || std::strcmp(name, "cr") == 0) return Component::Cr;
  throw Error(ErrorCode::InvalidArgument, std::string("unknown colour component '") + name + "'");
}

void PointCloud::validate() const {
  if (coords.size() != colors.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "coords/colors row count mismatch (" + std::to_string(coords.size()) + " vs " +
                    std::to_string(colors.size()) + ")");
  }
  if (coords.empty()) throw Error(ErrorCode::InvalidArgument, "point cloud is empty");
  for (std::size_t i = 0; i < colors.size(); ++i) {
    for (double v : colors[i]) {
      if (!std::isfinite(v) || v < 0.0 || v > 255.0) {
        throw Error(ErrorCode::InvalidArgument,
                    "colour of point " + std::to_string(i) + " is outside [0, 255]");
      }
    }
  }
}

}  // namespace gqe
