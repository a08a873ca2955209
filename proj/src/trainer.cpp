#include "gqe/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>

#include "gqe/color.hpp"
#include "gqe/error.hpp"
#include "gqe/ops.hpp"
#include "gqe/parallel.hpp"
#include "gqe/patching.hpp"
#include "gqe/ply.hpp"
#include "gqe/spatial.hpp"

namespace gqe {

namespace {

PointCloud as_ycbcr(const PointCloud& pc) {
  return pc.color_space == ColorSpace::YCbCr8 ? pc : rgb_to_ycbcr(pc);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

std::vector<TrainingPatch> build_training_patches(std::span<const CloudPair> pairs, const GQEConfig& net, double r,
                                                  Component component, std::size_t workers) {
  net.validate();
  const auto c = static_cast<std::size_t>(component);
  std::vector<TrainingPatch> out;
  for (const auto& pair : pairs) {
    const PointCloud clean = as_ycbcr(pair.clean);
    const PointCloud distorted = as_ycbcr(pair.distorted);
    if (clean.coords != distorted.coords)
      throw Error(ErrorCode::GeometryMismatch, "training pair clouds have different geometry");
    if (distorted.size() < net.n) continue;  // too small to hold one patch
    const PatchSet ps = extract_patches(distorted, net.n, r, 0, workers);
    const std::size_t base = out.size();
    out.resize(base + ps.size());
    parallel_for(ps.size(), workers, [&](std::size_t p) {
      const Patch& patch = ps.patches[p];
      TrainingPatch& tp = out[base + p];
      tp.geometry = prepare_geometry(to_points(patch.coords), net);
      tp.input.resize(net.n);
      tp.target.resize(net.n);
      for (std::size_t i = 0; i < net.n; ++i) {
        tp.input[i] = static_cast<float>(distorted.colors[patch.point_indices[i]][c] / 255.0);
        tp.target[i] = static_cast<float>(clean.colors[patch.point_indices[i]][c] / 255.0);
      }
    });
  }
  return out;
}

Checkpoint train(const TrainConfig& config, std::span<const TrainingPatch> patches, std::vector<EpochLog>* log,
                 const TrainHooks& hooks) {
  config.validate();
  if (patches.empty()) throw Error(ErrorCode::EmptyDataset, "no training patches");
  const GQEConfig& net = config.net;

  Checkpoint ckpt;
  ckpt.config = net;
  ckpt.component = config.component;
  ckpt.r = config.r;
  ckpt.weights = init_weights<float>(net, config.seed);
  tg::AdamState<float> adam;
  adam.base_lr = config.base_lr;

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(patches.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::min(config.batch_size, patches.size());

  auto snapshot = [&](int epochs_done, double last_loss) {
    Checkpoint c = ckpt;
    c.optimizer = adam;
    c.metadata = {{"epochs", std::to_string(epochs_done)},
                  {"seed", std::to_string(config.seed)},
                  {"final_loss", fmt(last_loss)},
                  {"patches", std::to_string(patches.size())}};
    return c;
  };

  double last_loss = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = tg::lr_at_epoch(config.base_lr, epoch, config.lr_step, config.lr_factor);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += bs) {
      const std::size_t b = std::min(bs, order.size() - start);
      std::vector<const PatchGeometry*> geoms(b);
      std::vector<float> in(b * net.n), target(b * net.n);
      for (std::size_t j = 0; j < b; ++j) {
        const TrainingPatch& tp = patches[order[start + j]];
        geoms[j] = &tp.geometry;
        std::copy(tp.input.begin(), tp.input.end(), in.begin() + static_cast<std::ptrdiff_t>(j * net.n));
        std::copy(tp.target.begin(), tp.target.end(), target.begin() + static_cast<std::ptrdiff_t>(j * net.n));
      }
      tg::Tape<float> tape;
      ParameterBinding<float> bind(tape, ckpt.weights, true);
      auto ctx = make_context<float>(tape, bind, geoms, net, tg::Mode::Train);
      const auto x = tape.constant(tg::Tensor<float>({b, net.n, 1}, std::move(in)));
      const auto y = tape.constant(tg::Tensor<float>({b, net.n, 1}, std::move(target)));
      const auto pred = gqenet_forward(ctx, ckpt.weights, x);
      const auto loss = tg::mse_loss(tape, pred, y);
      tape.backward(loss);
      const auto params = bind.params();
      const auto grads = bind.grads();
      tg::adam_step<float>(params, grads, adam, lr);
      loss_sum += loss.value()[0];
      ++batches;
    }
    last_loss = loss_sum / static_cast<double>(batches);
    const EpochLog entry{epoch + 1, lr, last_loss};
    if (log) log->push_back(entry);
    if (hooks.on_epoch) hooks.on_epoch(entry);
    const bool boundary = (epoch + 1) % config.lr_step == 0 && epoch + 1 < config.epochs;
    if (boundary && hooks.on_lr_boundary) hooks.on_lr_boundary(epoch + 1, snapshot(epoch + 1, last_loss));
  }
  return snapshot(config.epochs, last_loss);
}

Checkpoint train(const TrainConfig& config, std::span<const CloudPair> pairs, std::vector<EpochLog>* log,
                 const TrainHooks& hooks) {
  config.validate();
  if (pairs.empty()) throw Error(ErrorCode::EmptyDataset, "no training pairs");
  const auto patches = build_training_patches(pairs, config.net, config.r, config.component);
  return train(config, std::span<const TrainingPatch>(patches), log, hooks);
}

Checkpoint train(const TrainConfig& config, std::vector<EpochLog>* log, const TrainHooks& hooks) {
  config.validate();
  if (config.dataset.empty()) throw Error(ErrorCode::EmptyDataset, "config lists no pairs");
  std::vector<CloudPair> pairs;
  for (const auto& e : config.dataset) pairs.push_back({read_ply(e.clean), read_ply(e.distorted), {}});
  return train(config, std::span<const CloudPair>(pairs), log, hooks);
}

double evaluate_loss(const Checkpoint& ckpt, std::span<const TrainingPatch> patches, std::size_t workers) {
  if (patches.empty()) throw Error(ErrorCode::EmptyDataset, "no evaluation patches");
  std::vector<double> per(patches.size());
  parallel_for(patches.size(), workers, [&](std::size_t p) {
    const auto& tp = patches[p];
    const auto out = gqenet_infer<float>(ckpt.weights, ckpt.config, tp.geometry, tp.input);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double d = static_cast<double>(out[i]) - tp.target[i];
      s += d * d;
    }
    per[p] = s / static_cast<double>(out.size());
  });
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

}  // namespace gqe
