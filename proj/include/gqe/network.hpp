#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gqe/graph.hpp"
#include "gqe/normals.hpp"
#include "gqe/ops.hpp"

namespace gqe {

enum class AttentionLayout { ParallelSerial, Parallel4 };

struct GQEConfig {
  std::size_t n = 2048;
  std::size_t k = 20;
  std::size_t psga1_head = 16;
  std::size_t psga1_fusion = 32;
  std::size_t psga2_head = 64;
  std::size_t psga2_fusion = 128;
  std::size_t gcb1_out = 64;
  std::size_t gcb2_out = 256;
  std::size_t gcb3_out = 64;
  std::size_t gcb4_out = 256;
  double leaky_slope = 0.2;
  double distance_scale = 1.0;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  bool use_fr = true;
  bool fr_normals = true;
  bool fr_distance = true;
  AttentionLayout attention = AttentionLayout::ParallelSerial;

  std::size_t psga1_total() const { return 2 * psga1_head + psga1_fusion; }
  std::size_t psga2_total() const { return 2 * psga2_head + psga2_fusion; }

  // Full-size layout scaled to the given PSGA totals: heads take a quarter
  // each, fusion half; GCB1/GCB3 match the first total, GCB2/GCB4 the second.
  static GQEConfig with_widths(std::size_t psga1_total, std::size_t psga2_total);

  // Throws ConfigError.
  void validate() const;

  std::vector<std::pair<std::string, std::string>> to_kv() const;
  // Returns false for an unknown key; throws ConfigError for a bad value.
  bool apply(const std::string& key, const std::string& value);

  friend bool operator==(const GQEConfig&, const GQEConfig&) = default;
};

template <typename T>
struct LinearParams {
  tg::Tensor<T> weight;  // [Cin, Cout]
  tg::Tensor<T> bias;    // [Cout]
};

template <typename T>
struct ConvBnParams {
  LinearParams<T> conv;
  tg::Tensor<T> gamma;
  tg::Tensor<T> beta;
  tg::BatchNormStats<T> stats;
};

// One single-head attention block: two projection branches to L' channels
// and a 1-channel score compressor on each.
template <typename T>
struct ShaParams {
  ConvBnParams<T> proj_graph;
  ConvBnParams<T> proj_score;
  LinearParams<T> score_graph;
  LinearParams<T> score_aux;
};

template <typename T>
struct GcbParams {
  std::array<ConvBnParams<T>, 3> layers;
};

template <typename T>
struct ModelWeights {
  std::vector<ShaParams<T>> psga1;
  GcbParams<T> gcb1;
  std::vector<ShaParams<T>> psga2;
  GcbParams<T> gcb2;
  GcbParams<T> gcb3;
  GcbParams<T> gcb4;
  LinearParams<T> final_conv;

  // Learnable tensors in a fixed order.
  void for_each_param(const std::function<void(const std::string&, tg::Tensor<T>&)>& fn);
  void for_each_param(const std::function<void(const std::string&, const tg::Tensor<T>&)>& fn) const;
  // Batch-norm running statistics in a fixed order.
  void for_each_buffer(const std::function<void(const std::string&, tg::Tensor<T>&)>& fn);
  void for_each_buffer(const std::function<void(const std::string&, const tg::Tensor<T>&)>& fn) const;

  std::size_t parameter_count() const;
};

// Zero-shaped weights laid out for `config`.
template <typename T>
ModelWeights<T> allocate_weights(const GQEConfig& config);

// Uniform(-1/sqrt(Cin), 1/sqrt(Cin)) for every affine layer, unit BN
// scale, and an all-zero final layer so a fresh model is the identity.
template <typename T>
ModelWeights<T> init_weights(const GQEConfig& config, std::uint64_t seed);

// Throws ShapeAudit if any tensor disagrees with the layout for `config`.
template <typename T>
void audit_weights(const ModelWeights<T>& weights, const GQEConfig& config);

template <typename U, typename T>
ModelWeights<U> cast_weights(const ModelWeights<T>& weights);

// Maps every parameter tensor of a model to a tape variable.
template <typename T>
class ParameterBinding {
 public:
  ParameterBinding(tg::Tape<T>& tape, ModelWeights<T>& weights, bool requires_grad);

  const tg::Var<T>& operator()(const tg::Tensor<T>& param) const;

  std::vector<tg::Tensor<T>*> params() const { return params_; }
  // Gradients in for_each_param order; call after Tape::backward.
  std::vector<const tg::Tensor<T>*> grads() const;

 private:
  std::unordered_map<const tg::Tensor<T>*, tg::Var<T>> vars_;
  std::vector<tg::Tensor<T>*> params_;
};

// Geometry-derived inputs of one patch, computed once and shared by every
// block of a forward pass.
struct PatchGeometry {
  NeighborGraph graph;
  NormalField normals;
  std::vector<double> weights;  // n*k distance weights
};

PatchGeometry prepare_geometry(std::span<const Point3> points, const GQEConfig& config);

// Everything the blocks need besides weights.
template <typename T>
struct ForwardContext {
  tg::Tape<T>& tape;
  const ParameterBinding<T>& bind;
  std::vector<const NeighborGraph*> graphs;
  tg::Var<T> normals;           // [B, n, 3]
  tg::Var<T> distance_weights;  // [B, n, k, 1]
  const GQEConfig& config;
  tg::Mode mode;
  bool update_running_stats = true;
};

template <typename T>
ForwardContext<T> make_context(tg::Tape<T>& tape, const ParameterBinding<T>& bind,
                               std::span<const PatchGeometry* const> geometry, const GQEConfig& config, tg::Mode mode);

// Three (conv, BN, leaky ReLU) layers over [B, n, k, L1] then max over k.
template <typename T>
tg::Var<T> gcb(ForwardContext<T>& ctx, GcbParams<T>& p, const tg::Var<T>& edges);

template <typename T>
struct ShaOutput {
  tg::Var<T> attention;  // [B, n, L']
  tg::Var<T> graph;      // [B, n, k, L']
};

// Single-head graph attention on point features [B, n, L].
template <typename T>
ShaOutput<T> sha(ForwardContext<T>& ctx, ShaParams<T>& p, const tg::Var<T>& features);

template <typename T>
struct PsgaOutput {
  tg::Var<T> attention;  // F_a [B, n, Ctot]
  tg::Var<T> graph;      // F_g [B, n, k, Ctot]
};

template <typename T>
PsgaOutput<T> psga(ForwardContext<T>& ctx, std::vector<ShaParams<T>>& heads, const tg::Var<T>& features);

// Feature refinement: append normals, build edge features, scale by distance
// weights (each step subject to the config's ablation switches).
template <typename T>
tg::Var<T> fr(ForwardContext<T>& ctx, const tg::Var<T>& features);

// color: [B, n, 1] normalised to [0, 1]. Returns [B, n, 1].
template <typename T>
tg::Var<T> gqenet_forward(ForwardContext<T>& ctx, ModelWeights<T>& weights, const tg::Var<T>& color);

// Convenience inference for one patch in eval mode; color has n values.
template <typename T>
std::vector<T> gqenet_infer(const ModelWeights<T>& weights, const GQEConfig& config, const PatchGeometry& geometry,
                            std::span<const T> color);

}  // namespace gqe
