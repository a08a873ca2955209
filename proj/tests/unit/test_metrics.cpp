#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gqe/color.hpp"
#include "gqe/distortion.hpp"
#include "gqe/metrics.hpp"
#include "gqe/synthetic.hpp"
#include "support/oracles.hpp"

using namespace gqe;
using gqe::testing::code_of;

namespace {

PointCloud ycc_line(std::vector<double> y) {
  PointCloud pc;
  pc.color_space = ColorSpace::YCbCr8;
  for (std::size_t i = 0; i < y.size(); ++i) {
    pc.coords.push_back({int(i), 0, 0});
    pc.colors.push_back({y[i], 128, 128});
  }
  return pc;
}

RDCurve curve(std::vector<double> r, std::vector<double> p) {
  RDCurve c;
  for (std::size_t i = 0; i < r.size(); ++i) c.points.push_back({r[i], p[i]});
  return c;
}

const std::vector<double> kRates{0.1, 0.25, 0.5, 1.0, 2.0, 4.0};
const std::vector<double> kPsnr{26.1, 29.4, 32.0, 35.2, 38.3, 41.0};

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("psnr against a hand computation") {
  const PointCloud a = ycc_line({10, 20, 30, 40});
  const PointCloud b = ycc_line({11, 18, 30, 43});
  // MSE = (1 + 4 + 0 + 9) / 4 = 3.5
  CHECK(psnr(a, b, Component::Y) == doctest::Approx(42.690123165176345).epsilon(1e-12));
  CHECK(psnr(a, b, Component::Cb) == kInfinitePsnr);
  CHECK(combine_psnr(30, 36, 42) == doctest::Approx((6 * 30 + 36 + 42) / 8.0));
  const auto r = psnr_report(a, b);
  CHECK(std::isinf(r.ycbcr));
}

TEST_CASE("psnr preconditions") {
  PointCloud a = ycc_line({1, 2});
  PointCloud b = ycc_line({1, 2, 3});
  CHECK(code_of([&] { psnr(a, b, Component::Y); }) == ErrorCode::GeometryMismatch);
  b = a;
  b.color_space = ColorSpace::RGB8;
  CHECK(code_of([&] { psnr(a, b, Component::Y); }) == ErrorCode::WrongColorSpace);
}

TEST_CASE("bd metrics on reference curves") {
  const RDCurve a = curve(kRates, kPsnr);
  CHECK(bd_metric(a, a, BdMode::Psnr) == doctest::Approx(0).epsilon(1e-12));
  CHECK(std::abs(bd_metric(a, a, BdMode::Rate)) < 1e-9);

  std::vector<double> up(kPsnr);
  for (auto& p : up) p += 1;
  CHECK(std::abs(bd_metric(a, curve(kRates, up), BdMode::Psnr) - 1.0) < 1e-6);

  std::vector<double> doubled(kRates);
  for (auto& r : doubled) r *= 2;
  CHECK(std::abs(bd_metric(a, curve(doubled, kPsnr), BdMode::Rate) - 100.0) < 0.1);

  // Least-squares cubic values from an independent polynomial-fit routine.
  const RDCurve b = curve({0.09, 0.22, 0.47, 0.93, 1.9, 3.7}, {26.5, 29.9, 32.3, 35.6, 38.5, 41.3});
  CHECK(bd_metric(a, b, BdMode::Psnr) == doctest::Approx(0.6815897037445486).epsilon(1e-9));
  CHECK(bd_metric(a, b, BdMode::Rate) == doctest::Approx(-15.51874548682145).epsilon(1e-9));
}

TEST_CASE("bd metric errors") {
  const RDCurve a = curve(kRates, kPsnr);
  CHECK(code_of([&] { bd_metric(a, curve({1, 2, 3}, {30, 31, 32}), BdMode::Psnr); }) ==
        ErrorCode::InsufficientPoints);
  CHECK(code_of([&] { bd_metric(a, curve({10, 20, 30, 40}, {50, 51, 52, 53}), BdMode::Psnr); }) ==
        ErrorCode::NoOverlap);
  // An infinite point is dropped, leaving enough for a fit.
  std::vector<double> p(kPsnr);
  p.back() = kInfinitePsnr;
  CHECK(std::isfinite(bd_metric(a, curve(kRates, p), BdMode::Psnr)));
}

TEST_CASE("rd curve file") {
  gqe::testing::TempDir dir;
  std::ofstream(dir / "c.csv") << "bpip,psnr\n0.1,26.1\n0.25 29.4\n\n0.5,32.0\n1.0,35.2\n";
  const RDCurve c = read_rd_curve_csv(dir / "c.csv");
  REQUIRE(c.points.size() == 4);
  CHECK(c.points[1].bitrate == 0.25);
  CHECK(c.points[3].psnr == 35.2);
  std::ofstream(dir / "bad.csv") << "0.1,26.1\n0.2,abc\n";
  CHECK(code_of([&] { read_rd_curve_csv(dir / "bad.csv"); }) == ErrorCode::InvalidArgument);
}

}  // TEST_SUITE

TEST_SUITE("distortion") {

TEST_CASE("quantisation") {
  PointCloud pc = ycc_line({100, 3, 4, 255});
  const PointCloud q = quantize_colors(pc, 8);
  CHECK(q.colors[0][0] == 104);  // 12.5 rounds away from zero
  CHECK(q.colors[1][0] == 0);
  CHECK(q.colors[2][0] == 8);
  CHECK(q.colors[3][0] == 255);  // 256 clamps
  CHECK(q.colors[0][1] == 128);
  CHECK(quantize_colors(pc, 1).colors == pc.colors);
  CHECK(code_of([&] { quantize_colors(pc, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("smoothing blends toward the neighbourhood mean") {
  PointCloud pc = ycc_line({0, 90, 0, 0});
  pc.coords = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {10, 0, 0}};
  const PointCloud s = neighborhood_smooth(pc, 3, 0.5);
  // Point 1 neighbours {1, 0, 2}: mean 30, blend 0.5 * 90 + 0.5 * 30.
  CHECK(s.colors[1][0] == doctest::Approx(60));
  CHECK(neighborhood_smooth(pc, 3, 0.0).colors == pc.colors);
}

TEST_CASE("distortion is seeded and lowers quality") {
  const PointCloud clean = rgb_to_ycbcr(make_textured_surface(30, 4));
  DistortionLevel lvl = level_for_qp(46);
  lvl.noise_sigma = 2;
  lvl.seed = 9;
  const PointCloud a = apply_distortion(clean, lvl);
  CHECK(apply_distortion(clean, lvl).colors == a.colors);
  lvl.seed = 10;
  CHECK_FALSE(apply_distortion(clean, lvl).colors == a.colors);
  double prev = 0;
  for (int qp : {51, 46, 40, 34, 28}) {
    const double p = psnr(clean, apply_distortion(clean, level_for_qp(qp)), Component::Y);
    CHECK(p > prev);
    prev = p;
  }
  CHECK(code_of([] { level_for_qp(30); }) == ErrorCode::InvalidArgument);
  const auto pairs = make_pairs(clean, std::vector<DistortionLevel>{level_for_qp(51), level_for_qp(22)});
  CHECK(pairs.size() == 2);
  CHECK(pairs[1].distorted.coords == clean.coords);
}

TEST_CASE("synthetic clouds") {
  const PointCloud s = make_textured_surface(32, 7);
  CHECK_NOTHROW(s.validate());
  CHECK(s.size() > 900);
  CHECK(make_textured_surface(32, 7).colors == s.colors);
  CHECK(make_grid(4, 5, 6).size() == 120);
}

}  // TEST_SUITE
