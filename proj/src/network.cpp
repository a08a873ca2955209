#include "gqe/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gqe {

using tg::Mode;
using tg::Shape;
using tg::Tensor;
using tg::Var;

// ---------------------------------------------------------------- config

GQEConfig GQEConfig::with_widths(std::size_t psga1_total, std::size_t psga2_total) {
  GQEConfig c;
  c.psga1_head = psga1_total / 4;
  c.psga1_fusion = psga1_total - 2 * c.psga1_head;
  c.psga2_head = psga2_total / 4;
  c.psga2_fusion = psga2_total - 2 * c.psga2_head;
  c.gcb1_out = c.gcb3_out = psga1_total;
  c.gcb2_out = c.gcb4_out = psga2_total;
  return c;
}

void GQEConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (n < 1 || k < 1 || k > n) fail("need 1 <= k <= n");
  for (std::size_t w : {psga1_head, psga1_fusion, psga2_head, psga2_fusion, gcb1_out, gcb2_out, gcb3_out, gcb4_out}) {
    if (w == 0) fail("layer widths must be positive");
  }
  if (psga1_total() != gcb1_out) {
    fail("PSGA1 width " + std::to_string(psga1_total()) + " != target " + std::to_string(gcb1_out));
  }
  if (psga2_total() != gcb2_out) {
    fail("PSGA2 width " + std::to_string(psga2_total()) + " != target " + std::to_string(gcb2_out));
  }
  if (attention == AttentionLayout::Parallel4 && (psga1_total() % 4 != 0 || psga2_total() % 4 != 0)) {
    fail("parallel4 attention needs PSGA widths divisible by 4");
  }
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) fail("leaky_slope must lie in (0, 1)");
  if (!(distance_scale > 0.0)) fail("distance_scale must be > 0");
  if (!(bn_eps > 0.0)) fail("bn_eps must be > 0");
  if (use_fr && fr_normals && k < 3) fail("normals need k >= 3");
}

std::vector<std::pair<std::string, std::string>> GQEConfig::to_kv() const {
  auto num = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  return {
      {"n", std::to_string(n)},
      {"k", std::to_string(k)},
      {"psga1_head", std::to_string(psga1_head)},
      {"psga1_fusion", std::to_string(psga1_fusion)},
      {"psga2_head", std::to_string(psga2_head)},
      {"psga2_fusion", std::to_string(psga2_fusion)},
      {"gcb1_out", std::to_string(gcb1_out)},
      {"gcb2_out", std::to_string(gcb2_out)},
      {"gcb3_out", std::to_string(gcb3_out)},
      {"gcb4_out", std::to_string(gcb4_out)},
      {"leaky_slope", num(leaky_slope)},
      {"distance_scale", num(distance_scale)},
      {"bn_eps", num(bn_eps)},
      {"bn_momentum", num(bn_momentum)},
      {"use_fr", flag(use_fr)},
      {"fr_normals", flag(fr_normals)},
      {"fr_distance", flag(fr_distance)},
      {"attention", attention == AttentionLayout::Parallel4 ? "parallel4" : "parallel_serial"},
  };
}

namespace {

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || v[0] == '-') throw Error(ErrorCode::ConfigError, key + ": expected integer, got '" + v + "'");
  return static_cast<std::size_t>(x);
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw Error(ErrorCode::ConfigError, key + ": expected number, got '" + v + "'");
  return x;
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::ConfigError, key + ": expected true/false, got '" + v + "'");
}

}  // namespace

bool GQEConfig::apply(const std::string& key, const std::string& value) {
  std::size_t* sizes[] = {&n, &k, &psga1_head, &psga1_fusion, &psga2_head, &psga2_fusion,
                          &gcb1_out, &gcb2_out, &gcb3_out, &gcb4_out};
  static const char* size_keys[] = {"n", "k", "psga1_head", "psga1_fusion", "psga2_head", "psga2_fusion",
                                    "gcb1_out", "gcb2_out", "gcb3_out", "gcb4_out"};
  for (std::size_t i = 0; i < std::size(size_keys); ++i) {
    if (key == size_keys[i]) {
      *sizes[i] = parse_size(key, value);
      return true;
    }
  }
  if (key == "leaky_slope") leaky_slope = parse_real(key, value);
  else if (key == "distance_scale") distance_scale = parse_real(key, value);
  else if (key == "bn_eps") bn_eps = parse_real(key, value);
  else if (key == "bn_momentum") bn_momentum = parse_real(key, value);
  else if (key == "use_fr") use_fr = parse_flag(key, value);
  else if (key == "fr_normals") fr_normals = parse_flag(key, value);
  else if (key == "fr_distance") fr_distance = parse_flag(key, value);
  else if (key == "attention") {
    if (value == "parallel_serial") attention = AttentionLayout::ParallelSerial;
    else if (value == "parallel4") attention = AttentionLayout::Parallel4;
    else throw Error(ErrorCode::ConfigError, "attention: expected parallel_serial or parallel4");
  } else {
    return false;
  }
  return true;
}

// --------------------------------------------------------------- weights

namespace {

template <typename T>
LinearParams<T> make_linear(std::size_t cin, std::size_t cout) {
  return {Tensor<T>({cin, cout}), Tensor<T>({cout})};
}

template <typename T>
ConvBnParams<T> make_conv_bn(std::size_t cin, std::size_t cout) {
  return {make_linear<T>(cin, cout), Tensor<T>({cout}, T(1)), Tensor<T>({cout}, T(0)), tg::BatchNormStats<T>(cout)};
}

template <typename T>
ShaParams<T> make_sha(std::size_t in_channels, std::size_t width) {
  const std::size_t edge = 2 * in_channels;
  return {make_conv_bn<T>(edge, width), make_conv_bn<T>(edge, width), make_linear<T>(width, 1),
          make_linear<T>(width, 1)};
}

template <typename T>
GcbParams<T> make_gcb(std::size_t l1, std::size_t l2) {
  return {{make_conv_bn<T>(l1, l2), make_conv_bn<T>(l2, l2), make_conv_bn<T>(l2, l2)}};
}

template <typename T>
std::vector<ShaParams<T>> make_psga(const GQEConfig& c, std::size_t in_channels, std::size_t head, std::size_t fusion) {
  std::vector<ShaParams<T>> heads;
  if (c.attention == AttentionLayout::Parallel4) {
    const std::size_t w = (2 * head + fusion) / 4;
    for (int i = 0; i < 4; ++i) heads.push_back(make_sha<T>(in_channels, w));
  } else {
    heads.push_back(make_sha<T>(in_channels, head));
    heads.push_back(make_sha<T>(in_channels, head));
    heads.push_back(make_sha<T>(2 * head, fusion));
  }
  return heads;
}

// Width of the FR output for an input of `in_channels` per point.
std::size_t fr_width(const GQEConfig& c, std::size_t in_channels) {
  const bool normals = c.use_fr && c.fr_normals;
  return 2 * (in_channels + (normals ? 3 : 0));
}

template <typename T, typename Fn>
void visit_linear(const std::string& name, LinearParams<T>& p, Fn& fn) {
  fn(name + ".weight", p.weight);
  fn(name + ".bias", p.bias);
}

template <typename T, typename Fn>
void visit_conv_bn(const std::string& name, ConvBnParams<T>& p, Fn& fn) {
  visit_linear(name + ".conv", p.conv, fn);
  fn(name + ".bn.gamma", p.gamma);
  fn(name + ".bn.beta", p.beta);
}

template <typename T, typename Fn>
void visit_params(ModelWeights<T>& w, Fn& fn) {
  auto psga = [&](const std::string& name, std::vector<ShaParams<T>>& heads) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const std::string base = name + ".sha" + std::to_string(h);
      visit_conv_bn(base + ".proj_graph", heads[h].proj_graph, fn);
      visit_conv_bn(base + ".proj_score", heads[h].proj_score, fn);
      visit_linear(base + ".score_graph", heads[h].score_graph, fn);
      visit_linear(base + ".score_aux", heads[h].score_aux, fn);
    }
  };
  auto gcb = [&](const std::string& name, GcbParams<T>& g) {
    for (std::size_t l = 0; l < 3; ++l) visit_conv_bn(name + ".layer" + std::to_string(l), g.layers[l], fn);
  };
  psga("psga1", w.psga1);
  gcb("gcb1", w.gcb1);
  psga("psga2", w.psga2);
  gcb("gcb2", w.gcb2);
  gcb("gcb3", w.gcb3);
  gcb("gcb4", w.gcb4);
  visit_linear("final", w.final_conv, fn);
}

template <typename T, typename Fn>
void visit_buffers(ModelWeights<T>& w, Fn& fn) {
  auto stats = [&](const std::string& name, ConvBnParams<T>& p) {
    fn(name + ".bn.running_mean", p.stats.running_mean);
    fn(name + ".bn.running_var", p.stats.running_var);
  };
  auto psga = [&](const std::string& name, std::vector<ShaParams<T>>& heads) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const std::string base = name + ".sha" + std::to_string(h);
      stats(base + ".proj_graph", heads[h].proj_graph);
      stats(base + ".proj_score", heads[h].proj_score);
    }
  };
  auto gcb = [&](const std::string& name, GcbParams<T>& g) {
    for (std::size_t l = 0; l < 3; ++l) stats(name + ".layer" + std::to_string(l), g.layers[l]);
  };
  psga("psga1", w.psga1);
  gcb("gcb1", w.gcb1);
  psga("psga2", w.psga2);
  gcb("gcb2", w.gcb2);
  gcb("gcb3", w.gcb3);
  gcb("gcb4", w.gcb4);
}

}  // namespace

template <typename T>
void ModelWeights<T>::for_each_param(const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  visit_params(*this, fn);
}

template <typename T>
void ModelWeights<T>::for_each_param(const std::function<void(const std::string&, const Tensor<T>&)>& fn) const {
  auto adapter = [&](const std::string& name, Tensor<T>& t) { fn(name, t); };
  visit_params(const_cast<ModelWeights<T>&>(*this), adapter);
}

template <typename T>
void ModelWeights<T>::for_each_buffer(const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  visit_buffers(*this, fn);
}

template <typename T>
void ModelWeights<T>::for_each_buffer(const std::function<void(const std::string&, const Tensor<T>&)>& fn) const {
  auto adapter = [&](const std::string& name, Tensor<T>& t) { fn(name, t); };
  visit_buffers(const_cast<ModelWeights<T>&>(*this), adapter);
}

template <typename T>
std::size_t ModelWeights<T>::parameter_count() const {
  std::size_t total = 0;
  for_each_param([&](const std::string&, const Tensor<T>& t) { total += t.size(); });
  return total;
}

template <typename T>
ModelWeights<T> allocate_weights(const GQEConfig& c) {
  c.validate();
  ModelWeights<T> w;
  w.psga1 = make_psga<T>(c, 1, c.psga1_head, c.psga1_fusion);
  w.gcb1 = make_gcb<T>(fr_width(c, 1 + c.psga1_total()), c.gcb1_out);
  w.psga2 = make_psga<T>(c, c.gcb1_out, c.psga2_head, c.psga2_fusion);
  w.gcb2 = make_gcb<T>(fr_width(c, c.gcb1_out + c.psga2_total()), c.gcb2_out);
  w.gcb3 = make_gcb<T>(c.psga1_total(), c.gcb3_out);
  w.gcb4 = make_gcb<T>(c.psga2_total(), c.gcb4_out);
  w.final_conv = make_linear<T>(c.gcb2_out + c.gcb3_out + c.gcb4_out, 1);
  return w;
}

template <typename T>
ModelWeights<T> init_weights(const GQEConfig& config, std::uint64_t seed) {
  ModelWeights<T> w = allocate_weights<T>(config);
  std::mt19937_64 rng(seed);
  auto fill_linear = [&](LinearParams<T>& p) {
    const double bound = 1.0 / std::sqrt(double(p.weight.dim(0)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : p.weight.values()) v = T(dist(rng));
    for (auto& v : p.bias.values()) v = T(dist(rng));
  };
  auto fill_sha = [&](std::vector<ShaParams<T>>& heads) {
    for (auto& h : heads) {
      fill_linear(h.proj_graph.conv);
      fill_linear(h.proj_score.conv);
      fill_linear(h.score_graph);
      fill_linear(h.score_aux);
    }
  };
  auto fill_gcb = [&](GcbParams<T>& g) {
    for (auto& l : g.layers) fill_linear(l.conv);
  };
  fill_sha(w.psga1);
  fill_gcb(w.gcb1);
  fill_sha(w.psga2);
  fill_gcb(w.gcb2);
  fill_gcb(w.gcb3);
  fill_gcb(w.gcb4);
  // final_conv stays zero: the network starts as the identity on colour.
  return w;
}

template <typename T>
void audit_weights(const ModelWeights<T>& weights, const GQEConfig& config) {
  const ModelWeights<T> expected = allocate_weights<T>(config);
  std::vector<std::pair<std::string, Shape>> want, got;
  expected.for_each_param([&](const std::string& n, const Tensor<T>& t) { want.emplace_back(n, t.shape()); });
  expected.for_each_buffer([&](const std::string& n, const Tensor<T>& t) { want.emplace_back(n, t.shape()); });
  weights.for_each_param([&](const std::string& n, const Tensor<T>& t) { got.emplace_back(n, t.shape()); });
  weights.for_each_buffer([&](const std::string& n, const Tensor<T>& t) { got.emplace_back(n, t.shape()); });
  if (want.size() != got.size()) throw Error(ErrorCode::ShapeAudit, "tensor count differs from configuration");
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i] != got[i]) {
      throw Error(ErrorCode::ShapeAudit, got[i].first + " has shape " + tg::shape_string(got[i].second) +
                                             ", configuration expects " + want[i].first + " " +
                                             tg::shape_string(want[i].second));
    }
  }
}

template <typename U, typename T>
ModelWeights<U> cast_weights(const ModelWeights<T>& weights) {
  ModelWeights<U> out;
  auto conv = [](const Tensor<T>& t) {
    Tensor<U> r(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) r[i] = U(t[i]);
    return r;
  };
  auto lin = [&](const LinearParams<T>& p) { return LinearParams<U>{conv(p.weight), conv(p.bias)}; };
  auto cbn = [&](const ConvBnParams<T>& p) {
    ConvBnParams<U> r{lin(p.conv), conv(p.gamma), conv(p.beta), tg::BatchNormStats<U>(0)};
    r.stats.running_mean = conv(p.stats.running_mean);
    r.stats.running_var = conv(p.stats.running_var);
    return r;
  };
  auto sha = [&](const std::vector<ShaParams<T>>& heads) {
    std::vector<ShaParams<U>> r;
    for (const auto& h : heads) r.push_back({cbn(h.proj_graph), cbn(h.proj_score), lin(h.score_graph), lin(h.score_aux)});
    return r;
  };
  auto gcb = [&](const GcbParams<T>& g) {
    return GcbParams<U>{{cbn(g.layers[0]), cbn(g.layers[1]), cbn(g.layers[2])}};
  };
  out.psga1 = sha(weights.psga1);
  out.gcb1 = gcb(weights.gcb1);
  out.psga2 = sha(weights.psga2);
  out.gcb2 = gcb(weights.gcb2);
  out.gcb3 = gcb(weights.gcb3);
  out.gcb4 = gcb(weights.gcb4);
  out.final_conv = lin(weights.final_conv);
  return out;
}

// --------------------------------------------------------------- binding

template <typename T>
ParameterBinding<T>::ParameterBinding(tg::Tape<T>& tape, ModelWeights<T>& weights, bool requires_grad) {
  weights.for_each_param([&](const std::string&, Tensor<T>& t) {
    params_.push_back(&t);
    vars_.emplace(&t, tape.leaf(t, requires_grad));
  });
}

template <typename T>
const Var<T>& ParameterBinding<T>::operator()(const Tensor<T>& param) const {
  auto it = vars_.find(&param);
  if (it == vars_.end()) throw Error(ErrorCode::InvalidArgument, "tensor is not a bound model parameter");
  return it->second;
}

template <typename T>
std::vector<const Tensor<T>*> ParameterBinding<T>::grads() const {
  std::vector<const Tensor<T>*> g;
  for (auto* p : params_) g.push_back(&vars_.at(p).grad());
  return g;
}

// ----------------------------------------------------------------- blocks

PatchGeometry prepare_geometry(std::span<const Point3> points, const GQEConfig& config) {
  PatchGeometry g;
  g.graph = build_neighbor_graph(points, config.k);
  if (config.use_fr && config.fr_normals) g.normals = estimate_normals(points, g.graph);
  if (config.use_fr && config.fr_distance) g.weights = distance_weights(points, g.graph, config.distance_scale);
  return g;
}

template <typename T>
ForwardContext<T> make_context(tg::Tape<T>& tape, const ParameterBinding<T>& bind,
                               std::span<const PatchGeometry* const> geometry, const GQEConfig& config, Mode mode) {
  if (geometry.empty()) throw Error(ErrorCode::ShapeMismatch, "forward pass without patches");
  const std::size_t B = geometry.size(), n = config.n, k = config.k;
  ForwardContext<T> ctx{tape, bind, {}, {}, {}, config, mode};
  for (const auto* g : geometry) {
    if (g->graph.n != n || g->graph.k != k) {
      throw Error(ErrorCode::ShapeMismatch, "patch geometry does not match configured n/k");
    }
    ctx.graphs.push_back(&g->graph);
  }
  if (config.use_fr && config.fr_normals) {
    Tensor<T> normals({B, n, 3});
    for (std::size_t b = 0; b < B; ++b) {
      if (geometry[b]->normals.normals.size() != n) throw Error(ErrorCode::ShapeMismatch, "normals missing");
      for (std::size_t i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a) normals[(b * n + i) * 3 + a] = T(geometry[b]->normals.normals[i][a]);
    }
    ctx.normals = tape.constant(std::move(normals));
  }
  if (config.use_fr && config.fr_distance) {
    Tensor<T> w({B, n, k, 1});
    for (std::size_t b = 0; b < B; ++b) {
      if (geometry[b]->weights.size() != n * k) throw Error(ErrorCode::ShapeMismatch, "distance weights missing");
      for (std::size_t t = 0; t < n * k; ++t) w[b * n * k + t] = T(geometry[b]->weights[t]);
    }
    ctx.distance_weights = tape.constant(std::move(w));
  }
  return ctx;
}

namespace {

template <typename T>
Var<T> affine(ForwardContext<T>& ctx, const LinearParams<T>& p, const Var<T>& x) {
  return tg::linear_pointwise(ctx.tape, x, ctx.bind(p.weight), ctx.bind(p.bias));
}

template <typename T>
Var<T> conv_bn_act(ForwardContext<T>& ctx, ConvBnParams<T>& p, const Var<T>& x) {
  const tg::BatchNormOptions opts{ctx.config.bn_eps, ctx.config.bn_momentum, ctx.update_running_stats};
  Var<T> y = affine(ctx, p.conv, x);
  y = tg::batch_norm(ctx.tape, y, ctx.bind(p.gamma), ctx.bind(p.beta), p.stats, ctx.mode, opts);
  return tg::leaky_relu(ctx.tape, y, T(ctx.config.leaky_slope));
}

template <typename T>
Var<T> edges_of(ForwardContext<T>& ctx, const Var<T>& features) {
  return build_edge_features(ctx.tape, features, std::span<const NeighborGraph* const>(ctx.graphs));
}

}  // namespace

template <typename T>
Var<T> gcb(ForwardContext<T>& ctx, GcbParams<T>& p, const Var<T>& edges) {
  Var<T> x = edges;
  for (auto& layer : p.layers) x = conv_bn_act(ctx, layer, x);
  return tg::maxpool_neighbors(ctx.tape, x);
}

template <typename T>
ShaOutput<T> sha(ForwardContext<T>& ctx, ShaParams<T>& p, const Var<T>& features) {
  const Var<T> edges = edges_of(ctx, features);
  const Var<T> graph = conv_bn_act(ctx, p.proj_graph, edges);
  const Var<T> aux = conv_bn_act(ctx, p.proj_score, edges);
  Var<T> scores = tg::add(ctx.tape, affine(ctx, p.score_graph, graph), affine(ctx, p.score_aux, aux));
  scores = tg::leaky_relu(ctx.tape, scores, T(ctx.config.leaky_slope));
  // [..., k, 1] -> [..., k] for the row softmax, then back to broadcast.
  const Shape score_shape = scores.shape();
  Shape rows(score_shape.begin(), score_shape.end() - 1);
  Var<T> attn = tg::softmax_rows(ctx.tape, tg::reshape(ctx.tape, scores, rows));
  attn = tg::reshape(ctx.tape, attn, score_shape);
  const Var<T> attention = tg::sum_neighbors(ctx.tape, tg::mul(ctx.tape, graph, attn));
  return {attention, graph};
}

template <typename T>
PsgaOutput<T> psga(ForwardContext<T>& ctx, std::vector<ShaParams<T>>& heads, const Var<T>& features) {
  std::vector<Var<T>> atts, graphs;
  if (ctx.config.attention == AttentionLayout::Parallel4) {
    if (heads.size() != 4) throw Error(ErrorCode::ConfigError, "parallel4 attention expects four heads");
    for (auto& h : heads) {
      auto o = sha(ctx, h, features);
      atts.push_back(o.attention);
      graphs.push_back(o.graph);
    }
  } else {
    if (heads.size() != 3) throw Error(ErrorCode::ConfigError, "parallel-serial attention expects three heads");
    auto o1 = sha(ctx, heads[0], features);
    auto o2 = sha(ctx, heads[1], features);
    auto o3 = sha(ctx, heads[2], tg::concat_channels(ctx.tape, {o1.attention, o2.attention}));
    atts = {o1.attention, o2.attention, o3.attention};
    graphs = {o1.graph, o2.graph, o3.graph};
  }
  return {tg::concat_channels<T>(ctx.tape, atts), tg::concat_channels<T>(ctx.tape, graphs)};
}

template <typename T>
Var<T> fr(ForwardContext<T>& ctx, const Var<T>& features) {
  const GQEConfig& c = ctx.config;
  if (!c.use_fr) return edges_of(ctx, features);
  Var<T> x = features;
  if (c.fr_normals) x = tg::concat_channels(ctx.tape, {x, ctx.normals});
  Var<T> edges = edges_of(ctx, x);
  if (c.fr_distance) edges = tg::mul(ctx.tape, edges, ctx.distance_weights);
  return edges;
}

template <typename T>
Var<T> gqenet_forward(ForwardContext<T>& ctx, ModelWeights<T>& w, const Var<T>& color) {
  const GQEConfig& c = ctx.config;
  const Shape expect{ctx.graphs.size(), c.n, 1};
  if (color.shape() != expect) {
    throw Error(ErrorCode::ShapeMismatch,
                "colour input " + tg::shape_string(color.shape()) + ", expected " + tg::shape_string(expect));
  }
  auto& tape = ctx.tape;
  const auto p1 = psga(ctx, w.psga1, color);
  const Var<T> f1 = gcb(ctx, w.gcb1, fr(ctx, tg::concat_channels(tape, {color, p1.attention})));
  const auto p2 = psga(ctx, w.psga2, f1);
  const Var<T> f2 = gcb(ctx, w.gcb2, fr(ctx, tg::concat_channels(tape, {f1, p2.attention})));
  const Var<T> f3 = gcb(ctx, w.gcb3, p1.graph);
  const Var<T> f4 = gcb(ctx, w.gcb4, p2.graph);
  const Var<T> mixed = tg::concat_channels(tape, {f2, f3, f4});
  return tg::add(tape, color, affine(ctx, w.final_conv, mixed));
}

template <typename T>
std::vector<T> gqenet_infer(const ModelWeights<T>& weights, const GQEConfig& config, const PatchGeometry& geometry,
                            std::span<const T> color) {
  if (color.size() != config.n) throw Error(ErrorCode::ShapeMismatch, "patch colour has wrong length");
  // Eval mode reads the running statistics and never writes them.
  auto& w = const_cast<ModelWeights<T>&>(weights);
  tg::Tape<T> tape;
  ParameterBinding<T> bind(tape, w, false);
  const PatchGeometry* g = &geometry;
  auto ctx = make_context<T>(tape, bind, std::span<const PatchGeometry* const>(&g, 1), config, Mode::Eval);
  ctx.update_running_stats = false;
  const Var<T> in = tape.constant(Tensor<T>({1, config.n, 1}, std::vector<T>(color.begin(), color.end())));
  const Var<T> out = gqenet_forward(ctx, w, in);
  return out.value().to_vector();
}

#define GQE_INSTANTIATE_NETWORK(T)                                                                               \
  template struct ModelWeights<T>;                                                                              \
  template ModelWeights<T> allocate_weights<T>(const GQEConfig&);                                               \
  template ModelWeights<T> init_weights<T>(const GQEConfig&, std::uint64_t);                                    \
  template void audit_weights<T>(const ModelWeights<T>&, const GQEConfig&);                                     \
  template class ParameterBinding<T>;                                                                           \
  template ForwardContext<T> make_context<T>(tg::Tape<T>&, const ParameterBinding<T>&,                          \
                                             std::span<const PatchGeometry* const>, const GQEConfig&, Mode);     \
  template Var<T> gcb<T>(ForwardContext<T>&, GcbParams<T>&, const Var<T>&);                                     \
  template ShaOutput<T> sha<T>(ForwardContext<T>&, ShaParams<T>&, const Var<T>&);                               \
  template PsgaOutput<T> psga<T>(ForwardContext<T>&, std::vector<ShaParams<T>>&, const Var<T>&);                \
  template Var<T> fr<T>(ForwardContext<T>&, const Var<T>&);                                                     \
  template Var<T> gqenet_forward<T>(ForwardContext<T>&, ModelWeights<T>&, const Var<T>&);                       \
  template std::vector<T> gqenet_infer<T>(const ModelWeights<T>&, const GQEConfig&, const PatchGeometry&,       \
                                          std::span<const T>);

GQE_INSTANTIATE_NETWORK(float)
GQE_INSTANTIATE_NETWORK(double)

template ModelWeights<double> cast_weights<double, float>(const ModelWeights<float>&);
template ModelWeights<float> cast_weights<float, double>(const ModelWeights<double>&);

}  // namespace gqe
