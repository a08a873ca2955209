#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gqe/point_cloud.hpp"

namespace gqe {

struct Patch {
  // point_indices[0] is the patch's key point.
  std::vector<std::uint32_t> point_indices;
  std::vector<Coord> coords;
  std::vector<Color> colors;
};

struct PatchSet {
  std::vector<Patch> patches;
  std::size_t n = 0;
  double r = 0.0;
  std::size_t parent_size = 0;

  std::size_t size() const noexcept { return patches.size(); }
};

enum class PatchStrategy { Overlapping, Sequential };

// ceil(N * r / n).
std::size_t patch_count(std::size_t num_points, double r, std::size_t n);

// FPS key points (starting at `start`) each grouped with their n-1 nearest
// neighbours.
PatchSet extract_patches(const PointCloud& pc, std::size_t n, double r, std::size_t start = 0,
                         std::size_t workers = 1);

// ceil(N/n) patches walking the cloud in Morton order. The final patch is
// backfilled with the preceding points so it still holds exactly n.
PatchSet extract_patches_sequential(const PointCloud& pc, std::size_t n);

// Number of parent points that appear in no patch.
std::size_t count_uncovered(const PatchSet& ps);

// Writes the mean of all enhanced values covering each point into the named
// colour channel. `enhanced` is m*n values in patch order. Uncovered points
// keep their colour.
PointCloud fuse_patches(const PointCloud& pc, const PatchSet& ps, std::span<const double> enhanced,
                        Component component);

// Binary manifest: "GQEP", u32 version, u64 N, u32 n, f64 r, u32 m, then
// m*n u32 point indices. Little-endian.
void write_patch_manifest(const PatchSet& ps, const std::filesystem::path& path);
PatchSet read_patch_manifest(const std::filesystem::path& path);

}  // namespace gqe
