#include "gqe/adam.hpp"

#include <cmath>
#include <string>

namespace gqe::tg {

template <typename T>
void adam_step(std::span<Tensor<T>* const> params, std::span<const Tensor<T>* const> grads, AdamState<T>& state,
               double lr) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "adam_step: params/grads count differ");
  if (state.m.empty() && state.step == 0) {
    for (const auto* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  }
  if (state.m.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "adam_step: state/params count differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->shape() != grads[i]->shape() || state.m[i].shape() != params[i]->shape()) {
      throw Error(ErrorCode::ShapeMismatch, "adam_step: parameter " + std::to_string(i) + " shape mismatch");
    }
  }

  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, double(state.step));
  const double bc2 = 1.0 - std::pow(b2, double(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    const T* g = grads[i]->data();
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    for (std::size_t j = 0; j < params[i]->size(); ++j) {
      m[j] = T(b1 * m[j] + (1.0 - b1) * g[j]);
      v[j] = T(b2 * v[j] + (1.0 - b2) * double(g[j]) * g[j]);
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p[j] = T(p[j] - lr * mhat / (std::sqrt(vhat) + state.eps));
    }
  }
}

double lr_at_epoch(double base, int epoch, int step_epochs, double factor) {
  if (epoch < 0) throw Error(ErrorCode::InvalidArgument, "epoch must be >= 0");
  return base * std::pow(factor, epoch / step_epochs);
}

template void adam_step(std::span<Tensor<float>* const>, std::span<const Tensor<float>* const>, AdamState<float>&,
                        double);
template void adam_step(std::span<Tensor<double>* const>, std::span<const Tensor<double>* const>, AdamState<double>&,
                        double);

}  // namespace gqe::tg
