#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "gqe/network.hpp"
#include "gqe/normals.hpp"
#include "support/netcheck.hpp"

using namespace gqe;
using gqe::testing::code_of;

TEST_SUITE("network") {

TEST_CASE("default layout") {
  const GQEConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.psga1_total() == 64);
  CHECK(c.psga2_total() == 256);
  const GQEConfig small = GQEConfig::with_widths(16, 64);
  CHECK(small.psga1_head == 4);
  CHECK(small.psga1_fusion == 8);
  CHECK(small.gcb4_out == 64);
  CHECK_NOTHROW(small.validate());
}

TEST_CASE("config validation") {
  GQEConfig c;
  c.k = 3000;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);
  c = GQEConfig{};
  c.gcb1_out = 63;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);
  c = GQEConfig{};
  c.k = 2;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);
  c.use_fr = false;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config key-value round trip") {
  GQEConfig c = GQEConfig::with_widths(16, 64);
  c.n = 512;
  c.distance_scale = 0.3;
  c.fr_normals = false;
  c.attention = AttentionLayout::Parallel4;
  GQEConfig back = GQEConfig{};
  for (const auto& [k, v] : c.to_kv()) CHECK(back.apply(k, v));
  CHECK(back == c);
  CHECK_FALSE(back.apply("colour", "1"));
  CHECK(code_of([&] { back.apply("n", "lots"); }) == ErrorCode::ConfigError);
}

TEST_CASE("weights layout and audit") {
  const GQEConfig c = gqe::testing::tiny_config();
  auto w = init_weights<float>(c, 1);
  CHECK_NOTHROW(audit_weights(w, c));
  for (float v : w.final_conv.weight.storage()) CHECK(v == 0.0f);
  std::size_t count = 0;
  std::vector<std::string> names;
  w.for_each_param([&](const std::string& name, const tg::Tensor<float>& t) {
    count += t.size();
    names.push_back(name);
  });
  CHECK(count == w.parameter_count());
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  const GQEConfig other = GQEConfig::with_widths(16, 32);
  CHECK(code_of([&] { audit_weights(w, other); }) == ErrorCode::ShapeAudit);
  CHECK(init_weights<float>(c, 1).psga1[0].proj_graph.conv.weight == w.psga1[0].proj_graph.conv.weight);
  CHECK_FALSE(init_weights<float>(c, 2).psga1[0].proj_graph.conv.weight == w.psga1[0].proj_graph.conv.weight);
}

TEST_CASE("fresh model is the identity in eval mode") {
  const GQEConfig c = gqe::testing::tiny_config(64, 8);
  auto f = gqe::testing::make_net_fixture(c, 1, 5);
  const auto w = init_weights<float>(c, 5);
  std::vector<float> color(f.color.storage().begin(), f.color.storage().end());
  CHECK(gqenet_infer<float>(w, c, f.geometry[0], color) == color);
}

TEST_CASE("gcb traced by hand") {
  GQEConfig c;
  c.n = 1;
  c.k = 2;
  c.use_fr = false;
  ModelWeights<double> w;
  for (auto& layer : w.gcb1.layers) {
    layer.conv.weight = tg::Tensor<double>({2, 2}, {1, 0, 0, 1});
    layer.conv.bias = tg::Tensor<double>({2}, {0, 0});
    layer.gamma = tg::Tensor<double>({2}, {1, 1});
    layer.beta = tg::Tensor<double>({2}, {0, 0});
    layer.stats = tg::BatchNormStats<double>(2);
  }
  w.gcb1.layers[0].conv.weight = tg::Tensor<double>({2, 2}, {1, 0, 1, 1});
  tg::Tape<double> tape;
  ParameterBinding<double> bind(tape, w, false);
  PatchGeometry g;
  g.graph = NeighborGraph{1, 2, {0, 0}};
  const PatchGeometry* gp = &g;
  auto ctx = make_context<double>(tape, bind, std::span<const PatchGeometry* const>(&gp, 1), c, tg::Mode::Eval);
  // Edge (1, -1): layer 1 gives (0, -1), leaky to (0, -0.2), then two more
  // scalings by 0.2 on the negative channel. Edge (3, 0) stays (3, 0).
  const auto edges = tape.constant(tg::Tensor<double>({1, 1, 2, 2}, {1, -1, 3, 0}));
  const auto out = gcb(ctx, w.gcb1, edges);
  const double s = 1 / std::sqrt(1 + 1e-5);
  CHECK(out.shape() == tg::Shape{1, 1, 2});
  CHECK(out.value()[0] == doctest::Approx(3 * s * s * s).epsilon(1e-12));
  CHECK(out.value()[1] == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("permutation equivariance") {
  const GQEConfig c = gqe::testing::tiny_config(48, 6);
  auto f = gqe::testing::make_net_fixture(c, 1, 17);
  std::mt19937_64 rng(3);
  std::vector<Point3> pts(c.n);
  std::uniform_real_distribution<double> u(0, 5);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  std::vector<double> color = f.color.to_vector();
  std::vector<std::size_t> perm(c.n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Point3> ppts(c.n);
  std::vector<double> pcolor(c.n);
  for (std::size_t i = 0; i < c.n; ++i) {
    ppts[i] = pts[perm[i]];
    pcolor[i] = color[perm[i]];
  }
  const auto a = gqenet_infer<double>(f.weights, c, prepare_geometry(pts, c), color);
  const auto b = gqenet_infer<double>(f.weights, c, prepare_geometry(ppts, c), pcolor);
  double worst = 0;
  for (std::size_t i = 0; i < c.n; ++i) worst = std::max(worst, std::abs(b[i] - a[perm[i]]));
  CHECK(worst < 1e-10);
  CHECK(std::abs(a[0] - color[0]) > 1e-6);  // the model is not trivially the identity
}

TEST_CASE("feature refinement ablations change the computation") {
  GQEConfig c = gqe::testing::tiny_config(32, 4);
  auto f = gqe::testing::make_net_fixture(c, 1, 2);
  std::vector<double> color = f.color.to_vector();
  const auto full = gqenet_infer<double>(f.weights, c, f.geometry[0], color);
  GQEConfig no_dist = c;
  no_dist.fr_distance = false;
  const auto nd = gqenet_infer<double>(f.weights, no_dist, f.geometry[0], color);
  CHECK(full != nd);
  GQEConfig no_fr = c;
  no_fr.use_fr = false;
  // Without normals the GCB inputs shrink, so the layout differs.
  CHECK(code_of([&] { audit_weights(f.weights, no_fr); }) == ErrorCode::ShapeAudit);
  auto w2 = init_weights<double>(no_fr, 2);
  CHECK_NOTHROW(gqenet_infer<double>(w2, no_fr, prepare_geometry(std::vector<Point3>(32, Point3{}), no_fr), color));
}

TEST_CASE("end-to-end gradient check") {
  for (auto layout : {AttentionLayout::ParallelSerial, AttentionLayout::Parallel4}) {
    GQEConfig c = gqe::testing::tiny_config();
    c.attention = layout;
    auto f = gqe::testing::make_net_fixture(c, 2, 21);
    const auto r = gqe::testing::network_gradcheck(f);
    INFO("rel " << r.rel_error << " checked " << r.checked);
    CHECK(r.rel_error < 1e-3);
  }
}

TEST_CASE("forward rejects mismatched inputs") {
  const GQEConfig c = gqe::testing::tiny_config();
  auto f = gqe::testing::make_net_fixture(c, 1, 1);
  std::vector<double> color(c.n - 1, 0.5);
  CHECK(code_of([&] { gqenet_infer<double>(f.weights, c, f.geometry[0], color); }) == ErrorCode::ShapeMismatch);
  GQEConfig bigger = c;
  bigger.k = 5;
  std::vector<double> ok(c.n, 0.5);
  CHECK(code_of([&] { gqenet_infer<double>(f.weights, bigger, f.geometry[0], ok); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("cast keeps values") {
  const GQEConfig c = gqe::testing::tiny_config();
  const auto w = init_weights<float>(c, 3);
  const auto back = cast_weights<float>(cast_weights<double>(w));
  CHECK(back.gcb2.layers[1].conv.weight == w.gcb2.layers[1].conv.weight);
}

}  // TEST_SUITE

TEST_SUITE("normals") {

TEST_CASE("plane normals") {
  std::vector<Point3> pts;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y) pts.push_back({double(x), double(y), 2.0});
  const NormalField nf = estimate_normals(pts, 8);
  CHECK(nf.degenerate_count() == 0);
  for (const auto& n : nf.normals) {
    CHECK(n[2] == doctest::Approx(1).epsilon(1e-12));
    CHECK(std::abs(n[0]) < 1e-9);
  }
}

TEST_CASE("matches a Jacobi eigen oracle") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    // Anisotropic blobs so the smallest eigenvalue is well separated.
    std::vector<Point3> pts(12);
    const double sx = 3 + trial % 4, sy = 1.5, sz = 0.2;
    for (auto& p : pts) p = {sx * g(rng), sy * g(rng), sz * g(rng) + 0.3 * g(rng) * (trial % 2)};
    NeighborGraph graph{pts.size(), pts.size(), {}};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      graph.indices.push_back(static_cast<std::uint32_t>(i));
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (j != i) graph.indices.push_back(static_cast<std::uint32_t>(j));
    }
    const NormalField nf = estimate_normals(pts, graph);
    Point3 mean{0, 0, 0};
    for (const auto& p : pts)
      for (int a = 0; a < 3; ++a) mean[a] += p[a] / pts.size();
    std::array<std::array<double, 3>, 3> cov{};
    for (const auto& p : pts)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) cov[a][b] += (p[a] - mean[a]) * (p[b] - mean[b]);
    const Point3 expect = canonicalize_sign(gqe::testing::jacobi_smallest_eigenvector(cov));
    for (int a = 0; a < 3; ++a) CHECK(nf.normals[0][a] == doctest::Approx(expect[a]).epsilon(1e-8));
  }
}

TEST_CASE("degenerate neighbourhoods") {
  std::vector<Point3> pts(5, Point3{1, 1, 1});
  const NormalField nf = estimate_normals(pts, 3);
  CHECK(nf.degenerate_count() == 5);
  CHECK(nf.normals[0] == Point3{0, 0, 1});
}

TEST_CASE("sign canonicalisation") {
  CHECK(canonicalize_sign({0.1, -0.9, 0.2}) == Point3{-0.1, 0.9, -0.2});
  CHECK(canonicalize_sign({-0.6, 0.0, -0.6}) == Point3{0.6, -0.0, 0.6});
}

TEST_CASE("distance weights") {
  CHECK(distance_weight(0) == 1.0);
  CHECK(std::abs(distance_weight(std::log(3.0)) - 0.5) < 1e-12);
  std::vector<Point3> pts{{0, 0, 0}, {3, 4, 0}};
  const NeighborGraph g = build_neighbor_graph(pts, 2);
  const auto w = distance_weights(pts, g, 0.5);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == doctest::Approx(2 / (1 + std::exp(2.5))));
}

}  // TEST_SUITE
