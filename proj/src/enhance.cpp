#include "gqe/enhance.hpp"

#include <algorithm>

#include "gqe/error.hpp"
#include "gqe/parallel.hpp"
#include "gqe/patching.hpp"
#include "gqe/spatial.hpp"

namespace gqe {

PointCloud enhance_component(const Checkpoint& ckpt, const PointCloud& ycbcr, const EnhanceOptions& opts) {
  if (ycbcr.color_space != ColorSpace::YCbCr8) throw Error(ErrorCode::WrongColorSpace, "enhance expects YCbCr input");
  const GQEConfig& net = ckpt.config;
  net.validate();
  if (ycbcr.size() < net.n)
    throw Error(ErrorCode::InvalidArgument, "cloud has fewer points than the patch size");
  const auto c = static_cast<std::size_t>(ckpt.component);
  const PatchSet ps = extract_patches(ycbcr, net.n, ckpt.r, 0, opts.workers);
  std::vector<double> enhanced(ps.size() * net.n);
  parallel_for(ps.size(), opts.workers, [&](std::size_t p) {
    const Patch& patch = ps.patches[p];
    const PatchGeometry geom = prepare_geometry(to_points(patch.coords), net);
    std::vector<float> in(net.n);
    for (std::size_t i = 0; i < net.n; ++i) in[i] = static_cast<float>(patch.colors[i][c] / 255.0);
    const auto out = gqenet_infer<float>(ckpt.weights, net, geom, in);
    for (std::size_t i = 0; i < net.n; ++i)
      enhanced[p * net.n + i] = std::clamp(static_cast<double>(out[i]) * 255.0, 0.0, 255.0);
  });
  return fuse_patches(ycbcr, ps, enhanced, ckpt.component);
}

PointCloud enhance(const std::array<const Checkpoint*, 3>& ckpts, const PointCloud& input, const EnhanceOptions& opts) {
  for (std::size_t c = 0; c < 3; ++c) {
    const auto comp = static_cast<Component>(c);
    if (!ckpts[c]) throw Error(ErrorCode::MissingCheckpoint, std::string("no model for ") + component_name(comp));
    if (ckpts[c]->component != comp)
      throw Error(ErrorCode::ConfigMismatch, std::string("checkpoint for ") + component_name(ckpts[c]->component) +
                                                 " supplied as " + component_name(comp));
  }
  input.validate();
  PointCloud cur = input.color_space == ColorSpace::YCbCr8 ? input : rgb_to_ycbcr(input, opts.matrix);
  // Each model sees the distorted input of its own channel; channels are
  // independent so sequential replacement is equivalent.
  for (std::size_t c = 0; c < 3; ++c) cur = enhance_component(*ckpts[c], cur, opts);
  if (input.color_space == ColorSpace::RGB8) return ycbcr_to_rgb(cur, opts.matrix);
  for (auto& col : cur.colors)
    for (auto& v : col) v = round_clamp_8bit(v);
  return cur;
}

}  // namespace gqe
