#include "gqe/graph.hpp"

#include <algorithm>
#include <string>

namespace gqe {

NeighborGraph build_neighbor_graph(std::span<const Point3> points, std::size_t k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "graph needs k >= 1");
  NeighborGraph g;
  g.n = points.size();
  g.k = k;
  g.indices = knn_all(points, k);
  // Coincident points may put a lower-index twin in slot 0.
  for (std::size_t i = 0; i < g.n; ++i) {
    auto row = std::span(g.indices).subspan(i * k, k);
    if (row[0] == i) continue;
    auto it = std::find(row.begin(), row.end(), static_cast<std::uint32_t>(i));
    if (it == row.end()) {
      row.back() = static_cast<std::uint32_t>(i);
      it = row.end() - 1;
    }
    std::rotate(row.begin(), it, it + 1);
  }
  return g;
}

template <typename T>
tg::Var<T> build_edge_features(tg::Tape<T>& tape, const tg::Var<T>& features,
                               std::span<const NeighborGraph* const> graphs) {
  const tg::Tensor<T>& F = features.value();
  const std::size_t B = graphs.size();
  if (B == 0) throw Error(ErrorCode::ShapeMismatch, "build_edge_features without graphs");
  const std::size_t n = graphs[0]->n, k = graphs[0]->k;
  const bool batched = F.ndim() == 3;
  if (!(F.ndim() == 2 || batched) || (batched ? F.dim(0) != B || F.dim(1) != n : B != 1 || F.dim(0) != n)) {
    throw Error(ErrorCode::ShapeMismatch,
                "build_edge_features: features " + tg::shape_string(F.shape()) + " vs " + std::to_string(B) +
                    " graph(s) of " + std::to_string(n) + " points");
  }
  for (const auto* g : graphs) {
    if (g->n != n || g->k != k || g->indices.size() != n * k) {
      throw Error(ErrorCode::ShapeMismatch, "build_edge_features: inconsistent graphs in batch");
    }
    for (auto idx : g->indices) {
      if (idx >= n) throw Error(ErrorCode::IndexOutOfRange, "neighbour index " + std::to_string(idx));
    }
  }
  const std::size_t L = F.cols();
  // Flattened global neighbour rows.
  std::vector<std::uint32_t> nbr(B * n * k);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < n * k; ++t) nbr[b * n * k + t] = static_cast<std::uint32_t>(b * n + graphs[b]->indices[t]);

  tg::Shape out_shape = batched ? tg::Shape{B, n, k, 2 * L} : tg::Shape{n, k, 2 * L};
  tg::Tensor<T> y(out_shape);
  const std::size_t P = B * n;
  for (std::size_t i = 0; i < P; ++i) {
    const T* fi = F.data() + i * L;
    for (std::size_t j = 0; j < k; ++j) {
      const T* fj = F.data() + std::size_t(nbr[i * k + j]) * L;
      T* o = y.data() + (i * k + j) * 2 * L;
      for (std::size_t c = 0; c < L; ++c) {
        o[c] = fi[c];
        o[L + c] = fj[c] - fi[c];
      }
    }
  }
  return tape.record("build_edge_features", std::move(y), {&features},
                     [fn = features.shared(), nbr = std::move(nbr), P, k, L](tg::Node<T>* out) mutable {
                       return [fn, out, nbr = std::move(nbr), P, k, L] {
                         T* df = fn->grad_buffer().data();
                         const T* g = out->grad.data();
                         for (std::size_t i = 0; i < P; ++i) {
                           for (std::size_t j = 0; j < k; ++j) {
                             const T* gij = g + (i * k + j) * 2 * L;
                             T* di = df + i * L;
                             T* dj = df + std::size_t(nbr[i * k + j]) * L;
                             for (std::size_t c = 0; c < L; ++c) {
                               di[c] += gij[c] - gij[L + c];
                               dj[c] += gij[L + c];
                             }
                           }
                         }
                       };
                     });
}

template tg::Var<float> build_edge_features(tg::Tape<float>&, const tg::Var<float>&,
                                            std::span<const NeighborGraph* const>);
template tg::Var<double> build_edge_features(tg::Tape<double>&, const tg::Var<double>&,
                                             std::span<const NeighborGraph* const>);

}  // namespace gqe
