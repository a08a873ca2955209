#include "gqe/normals.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "gqe/error.hpp"

namespace gqe {

std::size_t NormalField::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), 1));
}

Point3 canonicalize_sign(const Point3& v) {
  int axis = 2;
  for (int a : {1, 0}) {
    if (std::abs(v[a]) > std::abs(v[axis])) axis = a;
  }
  if (v[axis] >= 0) return v;
  return {-v[0], -v[1], -v[2]};
}

NormalField estimate_normals(std::span<const Point3> points, const NeighborGraph& graph) {
  if (graph.k < 3) throw Error(ErrorCode::InvalidArgument, "normal estimation needs k >= 3");
  if (graph.n != points.size()) throw Error(ErrorCode::ShapeMismatch, "graph does not match point count");
  NormalField field;
  field.normals.resize(points.size());
  field.degenerate.assign(points.size(), 0);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto nbrs = graph.row(i);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (auto j : nbrs) mean += Eigen::Vector3d(points[j][0], points[j][1], points[j][2]);
    mean /= double(nbrs.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (auto j : nbrs) {
      const Eigen::Vector3d d = Eigen::Vector3d(points[j][0], points[j][1], points[j][2]) - mean;
      cov += d * d.transpose();
    }
    cov /= double(nbrs.size());
    const double scale = cov.trace();
    if (!(scale > 1e-12)) {
      field.normals[i] = {0.0, 0.0, 1.0};
      field.degenerate[i] = 1;
      continue;
    }
    // Normalising keeps the solver's absolute tolerances meaningful.
    solver.compute(cov / scale);
    const Eigen::Vector3d v = solver.eigenvectors().col(0).normalized();
    field.normals[i] = canonicalize_sign({v.x(), v.y(), v.z()});
  }
  return field;
}

NormalField estimate_normals(std::span<const Point3> points, std::size_t k) {
  return estimate_normals(points, build_neighbor_graph(points, k));
}

std::vector<double> distance_weights(std::span<const Point3> points, const NeighborGraph& graph, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "distance scale must be > 0");
  std::vector<double> w(graph.indices.size());
  for (std::size_t i = 0; i < graph.n; ++i) {
    for (std::size_t j = 0; j < graph.k; ++j) {
      const auto nb = graph.indices[i * graph.k + j];
      w[i * graph.k + j] = distance_weight(scale * std::sqrt(squared_distance(points[i], points[nb])));
    }
  }
  return w;
}

}  // namespace gqe
