#pragma once

#include <cstdint>

#include "gqe/point_cloud.hpp"

namespace gqe {

// Voxelised height-field surface with a random colour texture (smooth
// gradients, sinusoids and sharp-edged regions), tagged RGB8. Intended for
// training and testing without external data. Roughly side*side points.
PointCloud make_textured_surface(std::size_t side, std::uint64_t seed);

// Full nx*ny*nz lattice with a flat grey colour.
PointCloud make_grid(std::size_t nx, std::size_t ny, std::size_t nz);

}  // namespace gqe
