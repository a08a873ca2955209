#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "gqe/adam.hpp"
#include "gqe/config.hpp"
#include "gqe/network.hpp"

namespace gqe {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Weights of one per-component model plus what is needed to apply them.
struct Checkpoint {
  GQEConfig config;
  Component component = Component::Y;
  double r = 2.0;  // patch overlap used at inference
  ModelWeights<float> weights;
  std::optional<tg::AdamState<float>> optimizer;
  KeyValues metadata;
};

// Layout (little-endian): "GQEW", u32 version, u32 component, f64 r,
// config text block, u32 tensor count, tensors (params then BN buffers),
// u8 optimizer flag [+ i64 step, f64 beta1, beta2, eps, base_lr, moments],
// metadata text block. Tensors: u16 name length, name, u32 rank, u32 dims,
// f32 data. Text blocks: u32 length, `key = value` lines.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

// Throws BadMagic, VersionUnsupported, CorruptTensor, ShapeAudit; and
// ConfigMismatch when `expected` is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path, const GQEConfig* expected = nullptr);

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const GQEConfig* expected = nullptr);

}  // namespace gqe
