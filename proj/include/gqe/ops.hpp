#pragma once

#include <span>
#include <vector>

#include "gqe/autograd.hpp"

namespace gqe::tg {

enum class Mode { Train, Eval };

// Running statistics of one batch-norm layer (not learnable).
template <typename T>
struct BatchNormStats {
  Tensor<T> running_mean;
  Tensor<T> running_var;

  explicit BatchNormStats(std::size_t channels = 0)
      : running_mean({channels}, T(0)), running_var({channels}, T(1)) {}
};

struct BatchNormOptions {
  double eps = 1e-5;
  double momentum = 0.1;
  // Train mode only: fold batch statistics into the running averages.
  bool update_running = true;
};

// y = x W + b at every leading position. x: [..., Cin], W: [Cin, Cout], b: [Cout].
template <typename T>
Var<T> linear_pointwise(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b);

// Per-channel normalisation over all leading positions. Train mode uses the
// batch statistics (biased variance) and, unless disabled, updates `stats`
// with the unbiased variance. Eval mode uses `stats` and never modifies it.
template <typename T>
Var<T> batch_norm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  BatchNormStats<T>& stats, Mode mode, const BatchNormOptions& opts = {});

// Gradient at exactly 0 uses the positive branch.
template <typename T>
Var<T> leaky_relu(Tape<T>& tape, const Var<T>& x, T slope);

// Softmax along the last axis, max-subtracted.
template <typename T>
Var<T> softmax_rows(Tape<T>& tape, const Var<T>& a);

// [..., k, C] -> [..., C]. Backward routes to the lowest neighbour slot
// attaining the maximum.
template <typename T>
Var<T> maxpool_neighbors(Tape<T>& tape, const Var<T>& x);

// [..., k, C] -> [..., C] by summation over the neighbour axis.
template <typename T>
Var<T> sum_neighbors(Tape<T>& tape, const Var<T>& x);

// Concatenation along the last axis; leading shapes must match.
template <typename T>
Var<T> concat_channels(Tape<T>& tape, std::span<const Var<T>> xs);

template <typename T>
Var<T> concat_channels(Tape<T>& tape, std::initializer_list<Var<T>> xs) {
  std::vector<Var<T>> v(xs);
  return concat_channels<T>(tape, std::span<const Var<T>>(v));
}

enum class Elementwise { Add, Mul };

// b may equal a's shape, a's shape with a trailing 1 (broadcast across
// channels), or [C] matching a's last dim (broadcast across rows).
template <typename T>
Var<T> elementwise(Tape<T>& tape, const Var<T>& a, const Var<T>& b, Elementwise op);

template <typename T>
Var<T> add(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  return elementwise(tape, a, b, Elementwise::Add);
}

template <typename T>
Var<T> mul(Tape<T>& tape, const Var<T>& a, const Var<T>& b) {
  return elementwise(tape, a, b, Elementwise::Mul);
}

// Mean squared difference, scalar [1].
template <typename T>
Var<T> mse_loss(Tape<T>& tape, const Var<T>& pred, const Var<T>& target);

// Sum of all elements, scalar [1].
template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x);

template <typename T>
Var<T> reshape(Tape<T>& tape, const Var<T>& x, Shape shape);

// Same value, cut from the gradient graph.
template <typename T>
Var<T> detach(Tape<T>& tape, const Var<T>& x);

}  // namespace gqe::tg
