#include "gqe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace gqe {
namespace {

struct Wave {
  double fx, fy, fz, phase, amp;
};

std::vector<Wave> random_waves(std::mt19937_64& rng, int count, double amp, double min_period, double max_period) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Wave> waves;
  for (int i = 0; i < count; ++i) {
    const double period = min_period + (max_period - min_period) * u(rng);
    const double theta = 2 * std::numbers::pi * u(rng);
    const double f = 2 * std::numbers::pi / period;
    waves.push_back({f * std::cos(theta), f * std::sin(theta), f * (u(rng) - 0.5), 2 * std::numbers::pi * u(rng),
                     amp * (0.5 + u(rng))});
  }
  return waves;
}

double eval(const std::vector<Wave>& waves, double x, double y, double z) {
  double s = 0;
  for (const auto& w : waves) s += w.amp * std::sin(w.fx * x + w.fy * y + w.fz * z + w.phase);
  return s;
}

}  // namespace

PointCloud make_textured_surface(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s = double(side);
  const auto height = random_waves(rng, 3, s / 12.0, s / 2.0, 2.0 * s);
  const auto luma = random_waves(rng, 4, 22.0, 5.0, 40.0);
  const auto chroma_a = random_waves(rng, 2, 14.0, 8.0, 50.0);
  const auto chroma_b = random_waves(rng, 2, 14.0, 8.0, 50.0);

  // Flat-coloured regions give the texture sharp edges.
  struct Region {
    double x, y;
    double dl, da, db;
  };
  std::vector<Region> regions(8);
  for (auto& r : regions) {
    r = {u(rng) * s, u(rng) * s, (u(rng) - 0.5) * 90.0, (u(rng) - 0.5) * 50.0, (u(rng) - 0.5) * 50.0};
  }
  const double base = 90.0 + 70.0 * u(rng);

  PointCloud pc;
  pc.color_space = ColorSpace::RGB8;
  pc.coords.reserve(side * side);
  pc.colors.reserve(side * side);
  const double lift = s / 3.0;
  for (std::size_t ix = 0; ix < side; ++ix) {
    for (std::size_t iy = 0; iy < side; ++iy) {
      const double x = double(ix), y = double(iy);
      const double z = std::round(lift + eval(height, x, y, 0.0));
      const Region* nearest = &regions[0];
      double best = 1e300;
      for (const auto& r : regions) {
        const double d = (r.x - x) * (r.x - x) + (r.y - y) * (r.y - y);
        if (d < best) {
          best = d;
          nearest = &r;
        }
      }
      const double l = base + nearest->dl + eval(luma, x, y, z);
      const double a = nearest->da + eval(chroma_a, x, y, z);
      const double b = nearest->db + eval(chroma_b, x, y, z);
      pc.coords.push_back({std::int32_t(ix), std::int32_t(iy), std::int32_t(z)});
      pc.colors.push_back({std::clamp(std::round(l + a), 0.0, 255.0), std::clamp(std::round(l - 0.5 * a - 0.5 * b), 0.0, 255.0),
                           std::clamp(std::round(l + b), 0.0, 255.0)});
    }
  }
  return pc;
}

PointCloud make_grid(std::size_t nx, std::size_t ny, std::size_t nz) {
  PointCloud pc;
  pc.color_space = ColorSpace::RGB8;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      for (std::size_t z = 0; z < nz; ++z) {
        pc.coords.push_back({std::int32_t(x), std::int32_t(y), std::int32_t(z)});
        pc.colors.push_back({128.0, 128.0, 128.0});
      }
  return pc;
}

}  // namespace gqe
