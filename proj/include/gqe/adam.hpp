#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gqe/tensor.hpp"

namespace gqe::tg {

template <typename T>
struct AdamState {
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double base_lr = 0.0016;
};

// One bias-corrected Adam update. Moments are created on the first call.
template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
               double lr);

// base * factor^floor(epoch / step_epochs).
double lr_at_epoch(double base, int epoch, int step_epochs = 60, double factor = 0.25);

}  // namespace gqe::tg
