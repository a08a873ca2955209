#pragma once

#include <random>

#include "gqe/network.hpp"
#include "support/oracles.hpp"

namespace gqe::testing {

struct NetFixture {
  GQEConfig config;
  ModelWeights<double> weights;
  std::vector<PatchGeometry> geometry;
  tg::Tensor<double> color;  // [B, n, 1]
};

// Random real-valued patches (no distance ties) and weights whose final
// layer is non-zero so every block influences the output.
inline NetFixture make_net_fixture(const GQEConfig& config, std::size_t batch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 4.0), c(0.0, 1.0), s(-0.5, 0.5);
  NetFixture f{config, init_weights<double>(config, seed), {}, tg::Tensor<double>({batch, config.n, 1})};
  for (auto& v : f.weights.final_conv.weight.storage()) v = s(rng);
  for (auto& v : f.weights.final_conv.bias.storage()) v = s(rng);
  for (std::size_t b = 0; b < batch; ++b) {
    std::vector<Point3> pts(config.n);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    f.geometry.push_back(prepare_geometry(pts, config));
  }
  for (auto& v : f.color.storage()) v = c(rng);
  return f;
}

// Train-mode forward, projected to a scalar. Running statistics stay fixed.
inline tg::Var<double> net_scalar(NetFixture& f, tg::Tape<double>& tape, const ParameterBinding<double>& bind,
                                  const tg::Var<double>& color) {
  std::vector<const PatchGeometry*> geoms;
  for (const auto& g : f.geometry) geoms.push_back(&g);
  auto ctx = make_context<double>(tape, bind, geoms, f.config, tg::Mode::Train);
  ctx.update_running_stats = false;
  return project(tape, gqenet_forward(ctx, f.weights, color), 1234);
}

// Central differences over every parameter and every input colour. A
// coordinate is skipped when its forward and backward one-sided differences
// disagree, i.e. a ReLU or max-pool kink lies inside the stencil and the
// function has no derivative to compare against there.
inline GradCheck network_gradcheck(NetFixture& f, double h = 1e-6) {
  std::vector<tg::Tensor<double>> analytic;
  tg::Tensor<double> color_grad;
  std::vector<tg::Tensor<double>*> params;
  {
    tg::Tape<double> tape;
    ParameterBinding<double> bind(tape, f.weights, true);
    auto color = tape.leaf(f.color, true);
    tape.backward(net_scalar(f, tape, bind, color));
    for (const auto* g : bind.grads()) analytic.push_back(*g);
    color_grad = color.grad();
    params = bind.params();
  }
  auto eval = [&] {
    tg::Tape<double> tape;
    ParameterBinding<double> bind(tape, f.weights, false);
    return net_scalar(f, tape, bind, tape.constant(f.color)).value()[0];
  };
  params.push_back(&f.color);
  analytic.push_back(color_grad);

  GradCheck r;
  const double f0 = eval();
  double diff2 = 0, a2 = 0, n2 = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = *params[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p[i];
      p[i] = orig + h;
      const double fp = eval();
      p[i] = orig - h;
      const double fm = eval();
      p[i] = orig;
      const double num = (fp - fm) / (2 * h), an = analytic[t][i];
      const double fwd = (fp - f0) / h, bwd = (f0 - fm) / h;
      if (std::abs(fwd - bwd) > 1e-3 * std::max(1.0, std::abs(num))) {
        ++r.skipped;
        continue;
      }
      diff2 += (an - num) * (an - num);
      a2 += an * an;
      n2 += num * num;
      r.max_abs = std::max(r.max_abs, std::abs(an - num));
      ++r.checked;
    }
  }
  const double denom = std::sqrt(a2) + std::sqrt(n2);
  r.rel_error = denom > 0 ? std::sqrt(diff2) / denom : 0.0;
  return r;
}

inline GQEConfig tiny_config(std::size_t n = 32, std::size_t k = 4) {
  GQEConfig c = GQEConfig::with_widths(8, 16);
  c.n = n;
  c.k = k;
  return c;
}

}  // namespace gqe::testing
