#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gqe/point_cloud.hpp"

namespace gqe {

// Codec-like colour damage: optional seeded Gaussian noise, uniform
// quantisation with step `quant_step`, then a kNN low-pass blend.
struct DistortionLevel {
  int quant_step = 1;
  double smooth_strength = 0.0;
  std::size_t smooth_k = 8;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::string label;
};

// Stand-in levels for the six test rates QP 51, 46, 40, 34, 28, 22.
DistortionLevel level_for_qp(int qp);

// round(v / step) * step per channel (half away from zero), clamped.
PointCloud quantize_colors(const PointCloud& pc, int step);

// colour <- (1 - s) * colour + s * mean colour of the k nearest points
// (self included).
PointCloud neighborhood_smooth(const PointCloud& pc, std::size_t k, double strength);

PointCloud apply_distortion(const PointCloud& pc, const DistortionLevel& level);

struct CloudPair {
  PointCloud clean;
  PointCloud distorted;
  DistortionLevel level;
};

std::vector<CloudPair> make_pairs(const PointCloud& clean, std::span<const DistortionLevel> levels);

}  // namespace gqe
