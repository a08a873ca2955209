#pragma once

#include <functional>
#include <span>
#include <vector>

#include "gqe/checkpoint.hpp"
#include "gqe/config.hpp"
#include "gqe/distortion.hpp"

namespace gqe {

// One network input: patch geometry plus normalised colours of the
// trained component (distorted input, clean target).
struct TrainingPatch {
  PatchGeometry geometry;
  std::vector<float> input;
  std::vector<float> target;
};

// Patches every pair (YCbCr conversion applied to RGB clouds) with FPS+kNN.
std::vector<TrainingPatch> build_training_patches(std::span<const CloudPair> pairs, const GQEConfig& net, double r,
                                                  Component component, std::size_t workers = 1);

struct EpochLog {
  int epoch = 0;  // 1-based
  double lr = 0;
  double mean_loss = 0;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  // Fired after the last epoch of every learning-rate stage but the final one.
  std::function<void(int epoch, const Checkpoint&)> on_lr_boundary;
};

// Seeded shuffle per epoch, batches of batch_size, train-mode forward, MSE
// on normalised colours, Adam with the step schedule. Throws EmptyDataset.
Checkpoint train(const TrainConfig& config, std::span<const TrainingPatch> patches, std::vector<EpochLog>* log = nullptr,
                 const TrainHooks& hooks = {});

Checkpoint train(const TrainConfig& config, std::span<const CloudPair> pairs, std::vector<EpochLog>* log = nullptr,
                 const TrainHooks& hooks = {});

// Loads config.dataset from disk.
Checkpoint train(const TrainConfig& config, std::vector<EpochLog>* log = nullptr, const TrainHooks& hooks = {});

// Mean eval-mode MSE over the patches (normalised colour units).
double evaluate_loss(const Checkpoint& ckpt, std::span<const TrainingPatch> patches, std::size_t workers = 1);

}  // namespace gqe
