#include "gqe/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace gqe::tg {

std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;
template <typename T>
using MapCM = Eigen::Map<const Mat<T>>;

template <typename T>
MapCM<T> as_matrix(const Tensor<T>& t) {
  return MapCM<T>(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

template <typename T>
MapM<T> as_matrix(Tensor<T>& t) {
  return MapM<T>(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                                            shape_string(b));
}

// [..., k, C] split into (points, k, C).
struct NeighborLayout {
  std::size_t points, k, channels;
};

NeighborLayout neighbor_layout(const char* op, const Shape& s) {
  if (s.size() < 2) throw Error(ErrorCode::ShapeMismatch, std::string(op) + " needs [..., k, C], got " + shape_string(s));
  const std::size_t c = s[s.size() - 1], k = s[s.size() - 2];
  if (k == 0) throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": k must be >= 1");
  return {shape_size(s) / (c * k), k, c};
}

}  // namespace

template <typename T>
Var<T> linear_pointwise(Tape<T>& tape, const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  const Tensor<T>& X = x.value();
  const Tensor<T>& W = w.value();
  const Tensor<T>& B = b.value();
  if (W.ndim() != 2 || X.ndim() < 1 || X.cols() != W.dim(0)) shape_error("linear_pointwise", X.shape(), W.shape());
  if (B.size() != W.dim(1)) shape_error("linear_pointwise(bias)", W.shape(), B.shape());

  Shape out_shape = X.shape();
  out_shape.back() = W.dim(1);
  Tensor<T> y(out_shape);
  {
    auto Y = as_matrix(y);
    Y.noalias() = as_matrix(X) * as_matrix(W);
    Y.rowwise() += Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(B.data(), static_cast<Eigen::Index>(B.size()));
  }
  return tape.record("linear_pointwise", std::move(y), {&x, &w, &b},
                     [xn = x.shared(), wn = w.shared(), bn = b.shared()](Node<T>* out) {
                       return [xn, wn, bn, out] {
                         const auto dY = as_matrix(std::as_const(out->grad));
                         if (xn->requires_grad) {
                           auto dX = as_matrix(xn->grad_buffer());
                           dX.noalias() += dY * as_matrix(std::as_const(wn->value)).transpose();
                         }
                         if (wn->requires_grad) {
                           auto dW = as_matrix(wn->grad_buffer());
                           dW.noalias() += as_matrix(std::as_const(xn->value)).transpose() * dY;
                         }
                         if (bn->requires_grad) {
                           auto& db = bn->grad_buffer();
                           Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(db.data(), static_cast<Eigen::Index>(db.size())) +=
                               dY.colwise().sum();
                         }
                       };
                     });
}

template <typename T>
Var<T> batch_norm(Tape<T>& tape, const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, BatchNormStats<T>& stats,
                  Mode mode, const BatchNormOptions& opts) {
  const Tensor<T>& X = x.value();
  const std::size_t C = X.cols();
  const std::size_t R = X.rows();
  if (gamma.value().size() != C || beta.value().size() != C || stats.running_mean.size() != C ||
      stats.running_var.size() != C) {
    shape_error("batch_norm", X.shape(), gamma.shape());
  }
  if (R == 0) throw Error(ErrorCode::ShapeMismatch, "batch_norm on empty input");
  const T* g = gamma.value().data();
  const T* bt = beta.value().data();

  std::vector<T> mean(C), inv_std(C);
  if (mode == Mode::Train) {
    std::vector<double> s(C, 0.0), ss(C, 0.0);
    for (std::size_t r = 0; r < R; ++r) {
      const T* row = X.data() + r * C;
      for (std::size_t c = 0; c < C; ++c) s[c] += row[c];
    }
    for (std::size_t c = 0; c < C; ++c) s[c] /= double(R);
    for (std::size_t r = 0; r < R; ++r) {
      const T* row = X.data() + r * C;
      for (std::size_t c = 0; c < C; ++c) {
        const double d = double(row[c]) - s[c];
        ss[c] += d * d;
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      const double var = ss[c] / double(R);
      mean[c] = T(s[c]);
      inv_std[c] = T(1.0 / std::sqrt(var + opts.eps));
      if (opts.update_running) {
        const double unbiased = R > 1 ? ss[c] / double(R - 1) : var;
        stats.running_mean[c] = T((1.0 - opts.momentum) * double(stats.running_mean[c]) + opts.momentum * s[c]);
        stats.running_var[c] = T((1.0 - opts.momentum) * double(stats.running_var[c]) + opts.momentum * unbiased);
      }
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = stats.running_mean[c];
      inv_std[c] = T(1.0 / std::sqrt(double(stats.running_var[c]) + opts.eps));
    }
  }

  Tensor<T> xhat(X.shape());
  Tensor<T> y(X.shape());
  for (std::size_t r = 0; r < R; ++r) {
    const T* in = X.data() + r * C;
    T* h = xhat.data() + r * C;
    T* o = y.data() + r * C;
    for (std::size_t c = 0; c < C; ++c) {
      h[c] = (in[c] - mean[c]) * inv_std[c];
      o[c] = g[c] * h[c] + bt[c];
    }
  }

  return tape.record("batch_norm", std::move(y), {&x, &gamma, &beta},
                     [xn = x.shared(), gn = gamma.shared(), bn = beta.shared(), xhat = std::move(xhat),
                      inv_std = std::move(inv_std), mode, R, C](Node<T>* out) mutable {
                       return [xn, gn, bn, out, xhat = std::move(xhat), inv_std = std::move(inv_std), mode, R, C] {
                         const T* dy = out->grad.data();
                         std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
                         for (std::size_t r = 0; r < R; ++r) {
                           for (std::size_t c = 0; c < C; ++c) {
                             sum_dy[c] += dy[r * C + c];
                             sum_dy_xhat[c] += double(dy[r * C + c]) * xhat[r * C + c];
                           }
                         }
                         if (gn->requires_grad) {
                           auto& dg = gn->grad_buffer();
                           for (std::size_t c = 0; c < C; ++c) dg[c] += T(sum_dy_xhat[c]);
                         }
                         if (bn->requires_grad) {
                           auto& db = bn->grad_buffer();
                           for (std::size_t c = 0; c < C; ++c) db[c] += T(sum_dy[c]);
                         }
                         if (!xn->requires_grad) return;
                         T* dx = xn->grad_buffer().data();
                         const T* g = gn->value.data();
                         if (mode == Mode::Eval) {
                           for (std::size_t r = 0; r < R; ++r)
                             for (std::size_t c = 0; c < C; ++c) dx[r * C + c] += dy[r * C + c] * g[c] * inv_std[c];
                           return;
                         }
                         // dx = g*inv_std/R * (R*dy - sum(dy) - xhat*sum(dy*xhat))
                         std::vector<T> scale(C), mdy(C), mdyx(C);
                         for (std::size_t c = 0; c < C; ++c) {
                           scale[c] = g[c] * inv_std[c];
                           mdy[c] = T(sum_dy[c] / double(R));
                           mdyx[c] = T(sum_dy_xhat[c] / double(R));
                         }
                         for (std::size_t r = 0; r < R; ++r) {
                           for (std::size_t c = 0; c < C; ++c) {
                             const std::size_t i = r * C + c;
                             dx[i] += scale[c] * (dy[i] - mdy[c] - xhat[i] * mdyx[c]);
                           }
                         }
                       };
                     });
}

template <typename T>
Var<T> leaky_relu(Tape<T>& tape, const Var<T>& x, T slope) {
  const Tensor<T>& X = x.value();
  Tensor<T> y(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) y[i] = X[i] >= T(0) ? X[i] : slope * X[i];
  return tape.record("leaky_relu", std::move(y), {&x}, [xn = x.shared(), slope](Node<T>* out) {
    return [xn, out, slope] {
      auto& dx = xn->grad_buffer();
      const auto& X = xn->value;
      for (std::size_t i = 0; i < X.size(); ++i) dx[i] += X[i] >= T(0) ? out->grad[i] : slope * out->grad[i];
    };
  });
}

template <typename T>
Var<T> softmax_rows(Tape<T>& tape, const Var<T>& a) {
  const Tensor<T>& A = a.value();
  const std::size_t R = A.rows(), K = A.cols();
  Tensor<T> y(A.shape());
  for (std::size_t r = 0; r < R; ++r) {
    const T* in = A.data() + r * K;
    T* o = y.data() + r * K;
    const T mx = *std::max_element(in, in + K);
    T total = 0;
    for (std::size_t j = 0; j < K; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < K; ++j) o[j] /= total;
  }
  return tape.record("softmax_rows", std::move(y), {&a}, [an = a.shared(), R, K](Node<T>* out) {
    return [an, out, R, K] {
      T* da = an->grad_buffer().data();
      const T* s = out->value.data();
      const T* g = out->grad.data();
      for (std::size_t r = 0; r < R; ++r) {
        T dot = 0;
        for (std::size_t j = 0; j < K; ++j) dot += g[r * K + j] * s[r * K + j];
        for (std::size_t j = 0; j < K; ++j) da[r * K + j] += s[r * K + j] * (g[r * K + j] - dot);
      }
    };
  });
}

template <typename T>
Var<T> maxpool_neighbors(Tape<T>& tape, const Var<T>& x) {
  const Tensor<T>& X = x.value();
  const auto [P, K, C] = neighbor_layout("maxpool_neighbors", X.shape());
  Shape out_shape(X.shape().begin(), X.shape().end() - 2);
  out_shape.push_back(C);
  Tensor<T> y(out_shape);
  std::vector<std::uint32_t> arg(P * C, 0);
  for (std::size_t p = 0; p < P; ++p) {
    const T* base = X.data() + p * K * C;
    T* o = y.data() + p * C;
    std::uint32_t* am = arg.data() + p * C;
    std::copy(base, base + C, o);
    for (std::size_t j = 1; j < K; ++j) {
      const T* row = base + j * C;
      for (std::size_t c = 0; c < C; ++c) {
        if (row[c] > o[c]) {
          o[c] = row[c];
          am[c] = static_cast<std::uint32_t>(j);
        }
      }
    }
  }
  return tape.record("maxpool_neighbors", std::move(y), {&x},
                     [xn = x.shared(), arg = std::move(arg), P, K, C](Node<T>* out) mutable {
                       return [xn, out, arg = std::move(arg), P, K, C] {
                         T* dx = xn->grad_buffer().data();
                         const T* g = out->grad.data();
                         for (std::size_t p = 0; p < P; ++p)
                           for (std::size_t c = 0; c < C; ++c) dx[(p * K + arg[p * C + c]) * C + c] += g[p * C + c];
                       };
                     });
}

template <typename T>
Var<T> sum_neighbors(Tape<T>& tape, const Var<T>& x) {
  const Tensor<T>& X = x.value();
  const auto [P, K, C] = neighbor_layout("sum_neighbors", X.shape());
  Shape out_shape(X.shape().begin(), X.shape().end() - 2);
  out_shape.push_back(C);
  Tensor<T> y(out_shape);
  for (std::size_t p = 0; p < P; ++p) {
    T* o = y.data() + p * C;
    for (std::size_t j = 0; j < K; ++j) {
      const T* row = X.data() + (p * K + j) * C;
      for (std::size_t c = 0; c < C; ++c) o[c] += row[c];
    }
  }
  return tape.record("sum_neighbors", std::move(y), {&x}, [xn = x.shared(), P, K, C](Node<T>* out) {
    return [xn, out, P, K, C] {
      T* dx = xn->grad_buffer().data();
      const T* g = out->grad.data();
      for (std::size_t p = 0; p < P; ++p)
        for (std::size_t j = 0; j < K; ++j)
          for (std::size_t c = 0; c < C; ++c) dx[(p * K + j) * C + c] += g[p * C + c];
    };
  });
}

template <typename T>
Var<T> concat_channels(Tape<T>& tape, std::span<const Var<T>> xs) {
  if (xs.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_channels of nothing");
  const Shape& first = xs[0].shape();
  const Shape lead(first.begin(), first.end() - 1);
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& v : xs) {
    const Shape& s = v.shape();
    if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
      shape_error("concat_channels", first, s);
    }
    widths.push_back(s.back());
    total += s.back();
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  Tensor<T> y(out_shape);
  const std::size_t R = y.rows();
  std::size_t offset = 0;
  for (std::size_t a = 0; a < xs.size(); ++a) {
    const T* src = xs[a].value().data();
    const std::size_t w = widths[a];
    for (std::size_t r = 0; r < R; ++r) std::copy(src + r * w, src + (r + 1) * w, y.data() + r * total + offset);
    offset += w;
  }

  std::vector<const Var<T>*> input_ptrs;
  std::vector<std::shared_ptr<Node<T>>> inputs;
  for (const auto& v : xs) {
    input_ptrs.push_back(&v);
    inputs.push_back(v.shared());
  }
  return tape.record("concat_channels", std::move(y), input_ptrs,
                     [inputs = std::move(inputs), widths = std::move(widths), R, total](Node<T>* out) mutable {
                       return [inputs = std::move(inputs), widths = std::move(widths), out, R, total] {
                         std::size_t off = 0;
                         for (std::size_t a = 0; a < inputs.size(); ++a) {
                           const std::size_t w = widths[a];
                           if (inputs[a]->requires_grad) {
                             T* dx = inputs[a]->grad_buffer().data();
                             const T* g = out->grad.data();
                             for (std::size_t r = 0; r < R; ++r)
                               for (std::size_t c = 0; c < w; ++c) dx[r * w + c] += g[r * total + off + c];
                           }
                           off += w;
                         }
                       };
                     });
}

template <typename T>
Var<T> elementwise(Tape<T>& tape, const Var<T>& a, const Var<T>& b, Elementwise op) {
  const Tensor<T>& A = a.value();
  const Tensor<T>& B = b.value();
  enum class Bcast { Same, AcrossChannels, AcrossRows } mode;
  const std::size_t R = A.rows(), C = A.cols();
  if (B.shape() == A.shape()) {
    mode = Bcast::Same;
  } else if (B.ndim() == A.ndim() && B.cols() == 1 && B.size() == R &&
             std::equal(A.shape().begin(), A.shape().end() - 1, B.shape().begin())) {
    mode = Bcast::AcrossChannels;
  } else if (B.ndim() == 1 && B.size() == C) {
    mode = Bcast::AcrossRows;
  } else {
    shape_error("elementwise", A.shape(), B.shape());
  }
  auto b_index = [mode, C](std::size_t r, std::size_t c) -> std::size_t {
    switch (mode) {
      case Bcast::Same: return r * C + c;
      case Bcast::AcrossChannels: return r;
      case Bcast::AcrossRows: return c;
    }
    return 0;
  };
  Tensor<T> y(A.shape());
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = r * C + c;
      const T bv = B[b_index(r, c)];
      y[i] = op == Elementwise::Add ? A[i] + bv : A[i] * bv;
    }
  }
  return tape.record(op == Elementwise::Add ? "add" : "mul", std::move(y), {&a, &b},
                     [an = a.shared(), bn = b.shared(), op, b_index, R, C](Node<T>* out) {
                       return [an, bn, out, op, b_index, R, C] {
                         const T* g = out->grad.data();
                         T* da = an->requires_grad ? an->grad_buffer().data() : nullptr;
                         T* db = bn->requires_grad ? bn->grad_buffer().data() : nullptr;
                         for (std::size_t r = 0; r < R; ++r) {
                           for (std::size_t c = 0; c < C; ++c) {
                             const std::size_t i = r * C + c;
                             const std::size_t j = b_index(r, c);
                             if (op == Elementwise::Add) {
                               if (da) da[i] += g[i];
                               if (db) db[j] += g[i];
                             } else {
                               if (da) da[i] += g[i] * bn->value[j];
                               if (db) db[j] += g[i] * an->value[i];
                             }
                           }
                         }
                       };
                     });
}

template <typename T>
Var<T> mse_loss(Tape<T>& tape, const Var<T>& pred, const Var<T>& target) {
  const Tensor<T>& P = pred.value();
  const Tensor<T>& Q = target.value();
  if (P.shape() != Q.shape() || P.empty()) shape_error("mse_loss", P.shape(), Q.shape());
  double acc = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double d = double(P[i]) - double(Q[i]);
    acc += d * d;
  }
  Tensor<T> y({1}, T(acc / double(P.size())));
  return tape.record("mse_loss", std::move(y), {&pred, &target},
                     [pn = pred.shared(), qn = target.shared()](Node<T>* out) {
                       return [pn, qn, out] {
                         const std::size_t N = pn->value.size();
                         const T scale = out->grad[0] * T(2) / T(N);
                         T* dp = pn->requires_grad ? pn->grad_buffer().data() : nullptr;
                         T* dq = qn->requires_grad ? qn->grad_buffer().data() : nullptr;
                         for (std::size_t i = 0; i < N; ++i) {
                           const T d = scale * (pn->value[i] - qn->value[i]);
                           if (dp) dp[i] += d;
                           if (dq) dq[i] -= d;
                         }
                       };
                     });
}

template <typename T>
Var<T> sum(Tape<T>& tape, const Var<T>& x) {
  double acc = 0.0;
  for (T v : x.value().values()) acc += v;
  return tape.record("sum", Tensor<T>({1}, T(acc)), {&x}, [xn = x.shared()](Node<T>* out) {
    return [xn, out] {
      auto& dx = xn->grad_buffer();
      for (auto& v : dx.values()) v += out->grad[0];
    };
  });
}

template <typename T>
Var<T> reshape(Tape<T>& tape, const Var<T>& x, Shape shape) {
  if (shape_size(shape) != x.value().size()) shape_error("reshape", x.shape(), shape);
  return tape.record("reshape", x.value().reshaped(std::move(shape)), {&x}, [xn = x.shared()](Node<T>* out) {
    return [xn, out] {
      auto& dx = xn->grad_buffer();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += out->grad[i];
    };
  });
}

template <typename T>
Var<T> detach(Tape<T>& tape, const Var<T>& x) {
  return tape.constant(x.value());
}

#define GQE_INSTANTIATE_OPS(T)                                                                                    \
  template Var<T> linear_pointwise(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&);                       \
  template Var<T> batch_norm(Tape<T>&, const Var<T>&, const Var<T>&, const Var<T>&, BatchNormStats<T>&, Mode,    \
                             const BatchNormOptions&);                                                            \
  template Var<T> leaky_relu(Tape<T>&, const Var<T>&, T);                                                        \
  template Var<T> softmax_rows(Tape<T>&, const Var<T>&);                                                         \
  template Var<T> maxpool_neighbors(Tape<T>&, const Var<T>&);                                                    \
  template Var<T> sum_neighbors(Tape<T>&, const Var<T>&);                                                        \
  template Var<T> concat_channels(Tape<T>&, std::span<const Var<T>>);                                            \
  template Var<T> elementwise(Tape<T>&, const Var<T>&, const Var<T>&, Elementwise);                              \
  template Var<T> mse_loss(Tape<T>&, const Var<T>&, const Var<T>&);                                              \
  template Var<T> sum(Tape<T>&, const Var<T>&);                                                                  \
  template Var<T> reshape(Tape<T>&, const Var<T>&, Shape);                                                       \
  template Var<T> detach(Tape<T>&, const Var<T>&);

GQE_INSTANTIATE_OPS(float)
GQE_INSTANTIATE_OPS(double)

}  // namespace gqe::tg
