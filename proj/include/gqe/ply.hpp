#pragma once

#include <filesystem>

#include "gqe/point_cloud.hpp"

namespace gqe {

enum class PlyEncoding { Ascii, BinaryLittleEndian };

// Reads x/y/z plus red/green/blue from the vertex element of an ascii or
// binary_little_endian PLY file. Coordinates are rounded to the nearest
// integer; the result is tagged RGB8. Extra vertex properties are skipped.
PointCloud read_ply(const std::filesystem::path& path);

// Writes coords as float32 and colours as uchar (rounded half away from
// zero, clamped to [0, 255]). Colour space tags are not stored in the file.
void write_ply(const PointCloud& pc, const std::filesystem::path& path, PlyEncoding encoding);

}  // namespace gqe
