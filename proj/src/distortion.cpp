#include "gqe/distortion.hpp"

#include <cmath>
#include <random>

#include "gqe/color.hpp"
#include "gqe/error.hpp"
#include "gqe/spatial.hpp"

namespace gqe {

DistortionLevel level_for_qp(int qp) {
  struct Row {
    int qp, step;
    double smooth;
  };
  static constexpr Row kTable[] = {{51, 32, 0.5}, {46, 16, 0.3}, {40, 8, 0.2}, {34, 4, 0.1}, {28, 2, 0.05}, {22, 1, 0.0}};
  for (const auto& r : kTable) {
    if (r.qp == qp) {
      DistortionLevel l;
      l.quant_step = r.step;
      l.smooth_strength = r.smooth;
      l.label = "QP" + std::to_string(qp);
      return l;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "no distortion level for QP " + std::to_string(qp));
}

PointCloud quantize_colors(const PointCloud& pc, int step) {
  if (step < 1) throw Error(ErrorCode::InvalidArgument, "quantisation step must be >= 1");
  PointCloud out = pc;
  if (step == 1) return out;
  for (auto& c : out.colors) {
    for (auto& v : c) v = std::clamp(std::round(v / step) * step, 0.0, 255.0);
  }
  return out;
}

PointCloud neighborhood_smooth(const PointCloud& pc, std::size_t k, double strength) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "smoothing needs k >= 1");
  if (!(strength >= 0.0 && strength <= 1.0)) throw Error(ErrorCode::InvalidArgument, "strength must lie in [0, 1]");
  PointCloud out = pc;
  if (strength == 0.0) return out;
  const auto points = to_points(pc.coords);
  const auto nbrs = knn_all(points, k);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    Color mean{0, 0, 0};
    for (std::size_t j = 0; j < k; ++j) {
      const auto& c = pc.colors[nbrs[i * k + j]];
      for (int a = 0; a < 3; ++a) mean[a] += c[a];
    }
    for (int a = 0; a < 3; ++a) {
      out.colors[i][a] = (1.0 - strength) * pc.colors[i][a] + strength * (mean[a] / double(k));
    }
  }
  return out;
}

PointCloud apply_distortion(const PointCloud& pc, const DistortionLevel& level) {
  PointCloud work = pc;
  if (level.noise_sigma > 0.0) {
    std::mt19937_64 rng(level.seed);
    std::normal_distribution<double> noise(0.0, level.noise_sigma);
    for (auto& c : work.colors)
      for (auto& v : c) v = std::clamp(v + noise(rng), 0.0, 255.0);
  }
  work = quantize_colors(work, level.quant_step);
  return neighborhood_smooth(work, std::min(level.smooth_k, work.size()), level.smooth_strength);
}

std::vector<CloudPair> make_pairs(const PointCloud& clean, std::span<const DistortionLevel> levels) {
  if (levels.empty()) throw Error(ErrorCode::InvalidArgument, "make_pairs needs at least one level");
  std::vector<CloudPair> pairs;
  pairs.reserve(levels.size());
  for (const auto& l : levels) pairs.push_back({clean, apply_distortion(clean, l), l});
  return pairs;
}

}  // namespace gqe
