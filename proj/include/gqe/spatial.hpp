#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gqe/point_cloud.hpp"

namespace gqe {

using Point3 = std::array<double, 3>;

std::vector<Point3> to_points(std::span<const Coord> coords);

inline double squared_distance(const Point3& a, const Point3& b) noexcept {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

// Greedy max-min sampling. The first pick is `start`; every later pick
// maximises the distance to the already selected set, lowest index on ties.
std::vector<std::uint32_t> farthest_point_sample(std::span<const Point3> points, std::size_t m,
                                                 std::size_t start = 0);

// Exact k-d tree. Neighbour order is ascending (squared distance, index),
// identical to a brute-force scan with the same tie-break.
class KdTree {
 public:
  explicit KdTree(std::span<const Point3> points, std::size_t leaf_size = 12);

  std::size_t size() const noexcept { return points_.size(); }

  // Writes the k nearest points to `query` into `out` (size k).
  void knn(const Point3& query, std::size_t k, std::span<std::uint32_t> out) const;

 private:
  struct Node {
    double split = 0.0;
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

// Row q holds the k nearest cloud points to points[queries[q]], self
// included, so column 0 is the query itself. Result is Q*k row-major.
std::vector<std::uint32_t> knn_indices(std::span<const Point3> points, std::span<const std::uint32_t> queries,
                                       std::size_t k);

// Same, querying every point in order.
std::vector<std::uint32_t> knn_all(std::span<const Point3> points, std::size_t k);

}  // namespace gqe
