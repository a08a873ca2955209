#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gqe/autograd.hpp"
#include "gqe/spatial.hpp"

namespace gqe {

// kNN graph of one patch, computed from geometry. Row i lists k point
// indices, slot 0 always being i itself (the self loop).
struct NeighborGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;  // n*k

  std::span<const std::uint32_t> row(std::size_t i) const { return std::span(indices).subspan(i * k, k); }
};

NeighborGraph build_neighbor_graph(std::span<const Point3> points, std::size_t k);

// Edge features e_ij = (f_i, f_nbr(i,j) - f_i).
// features: [B, n, L] or [n, L]; `graphs` holds B graphs over n points.
// Result: [B, n, k, 2L] (or [n, k, 2L]).
template <typename T>
tg::Var<T> build_edge_features(tg::Tape<T>& tape, const tg::Var<T>& features,
                               std::span<const NeighborGraph* const> graphs);

template <typename T>
tg::Var<T> build_edge_features(tg::Tape<T>& tape, const tg::Var<T>& features, const NeighborGraph& graph) {
  const NeighborGraph* g = &graph;
  return build_edge_features(tape, features, std::span<const NeighborGraph* const>(&g, 1));
}

}  // namespace gqe
