#include "gqe/spatial.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "gqe/error.hpp"

namespace gqe {

std::vector<Point3> to_points(std::span<const Coord> coords) {
  std::vector<Point3> pts(coords.size());
  for (std::size_t i = 0; i < coords.size(); ++i) {
    pts[i] = {double(coords[i][0]), double(coords[i][1]), double(coords[i][2])};
  }
  return pts;
}

std::vector<std::uint32_t> farthest_point_sample(std::span<const Point3> points, std::size_t m,
                                                 std::size_t start) {
  const std::size_t n = points.size();
  if (m < 1 || m > n) {
    throw Error(ErrorCode::InvalidArgument,
                "FPS needs 1 <= m <= N (m=" + std::to_string(m) + ", N=" + std::to_string(n) + ")");
  }
  if (start >= n) throw Error(ErrorCode::InvalidArgument, "FPS start index out of range");

  std::vector<std::uint32_t> picked;
  picked.reserve(m);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (std::size_t s = 0; s < m; ++s) {
    picked.push_back(static_cast<std::uint32_t>(current));
    const Point3 c = points[current];
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = std::min(min_d2[i], squared_distance(points[i], c));
      min_d2[i] = d;
      if (d > best) {
        best = d;
        best_idx = i;
      }
    }
    current = best_idx;
  }
  return picked;
}

KdTree::KdTree(std::span<const Point3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), order_(points.size()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= leaf_size_) return id;

  Point3 lo = points_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], points_[order_[i]][a]);
      hi[a] = std::max(hi[a], points_[order_[i]][a]);
    }
  }
  std::uint8_t axis = 0;
  for (std::uint8_t a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  if (hi[axis] == lo[axis]) return id;  // all points coincide: keep as leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::knn(const Point3& query, std::size_t k, std::span<std::uint32_t> out) const {
  if (k > points_.size()) throw Error(ErrorCode::InvalidArgument, "k exceeds point count");
  if (out.size() != k) throw Error(ErrorCode::ShapeMismatch, "knn output span has wrong size");
  if (k == 0) return;

  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry> heap;  // max-heap on (d2, index)
  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const Entry e{squared_distance(points_[idx], query), idx};
        if (heap.size() < k) {
          heap.push(e);
        } else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      return;
    }
    // The left subtree holds coordinates <= split, the right >= split.
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0 ? node.left : node.right;
    const std::int32_t far = diff < 0 ? node.right : node.left;
    self(self, near);
    // Equal distances must still be explored so lower indices can win ties.
    if (heap.size() < k || diff * diff <= heap.top().first) self(self, far);
  };
  visit(visit, 0);

  for (std::size_t j = k; j-- > 0;) {
    out[j] = heap.top().second;
    heap.pop();
  }
}

std::vector<std::uint32_t> knn_indices(std::span<const Point3> points, std::span<const std::uint32_t> queries,
                                       std::size_t k) {
  if (k > points.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "k=" + std::to_string(k) + " exceeds point count " + std::to_string(points.size()));
  }
  for (auto q : queries) {
    if (q >= points.size()) throw Error(ErrorCode::IndexOutOfRange, "query index out of range");
  }
  std::vector<std::uint32_t> out(queries.size() * k);
  if (k == 0 || queries.empty()) return out;
  const KdTree tree(points);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    tree.knn(points[queries[q]], k, std::span(out).subspan(q * k, k));
  }
  return out;
}

std::vector<std::uint32_t> knn_all(std::span<const Point3> points, std::size_t k) {
  std::vector<std::uint32_t> queries(points.size());
  std::iota(queries.begin(), queries.end(), 0u);
  return knn_indices(points, queries, k);
}

}  // namespace gqe
