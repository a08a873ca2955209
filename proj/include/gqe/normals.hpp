#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "gqe/graph.hpp"
#include "gqe/spatial.hpp"

namespace gqe {

struct NormalField {
  std::vector<Point3> normals;  // unit length, canonical sign
  std::vector<char> degenerate;  // 1 where the neighbourhood had no spread
  std::size_t degenerate_count() const;
};

// PCA normal: eigenvector of the smallest eigenvalue of each neighbourhood's
// covariance. The sign is chosen so the largest-magnitude component is
// positive (exact ties prefer z, then y, then x). Degenerate neighbourhoods
// get (0, 0, 1).
NormalField estimate_normals(std::span<const Point3> points, const NeighborGraph& graph);
NormalField estimate_normals(std::span<const Point3> points, std::size_t k);

// Flips v so that its dominant component is positive.
Point3 canonicalize_sign(const Point3& v);

// w_ij = 2 * (1 - sigmoid(scale * |p_i - p_nbr(i,j)|)), n*k values.
std::vector<double> distance_weights(std::span<const Point3> points, const NeighborGraph& graph, double scale);

inline double distance_weight(double d) { return 2.0 / (1.0 + std::exp(d)); }

}  // namespace gqe
