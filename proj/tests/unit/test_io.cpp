#include <fstream>
#include <random>

#include "doctest.h"
#include "gqe/color.hpp"
#include "gqe/ply.hpp"
#include "support/oracles.hpp"

using namespace gqe;
using gqe::testing::code_of;

namespace {

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

}  // namespace

TEST_SUITE("io_core") {

TEST_CASE("ply round trip in both encodings") {
  gqe::testing::TempDir dir;
  std::mt19937_64 rng(3);
  const PointCloud pc = gqe::testing::random_cloud(rng, 300, 1023);
  for (auto enc : {PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian}) {
    const auto path = dir / "cloud.ply";
    write_ply(pc, path, enc);
    const PointCloud back = read_ply(path);
    CHECK(back.coords == pc.coords);
    CHECK(back.colors == pc.colors);
    CHECK(back.color_space == ColorSpace::RGB8);
  }
}

TEST_CASE("ascii reader handles extra properties and rounds coordinates") {
  gqe::testing::TempDir dir;
  write_text(dir / "a.ply",
             "ply\nformat ascii 1.0\ncomment hi\nelement vertex 2\nproperty float x\nproperty float y\n"
             "property float z\nproperty float nx\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
             "element face 0\nproperty list uchar int vertex_indices\nend_header\n"
             "1.4 2.6 -3.5 0.1 10 20 30\n4 5 6 0 255 0 7\n");
  const PointCloud pc = read_ply(dir / "a.ply");
  REQUIRE(pc.size() == 2);
  CHECK(pc.coords[0] == Coord{1, 3, -4});
  CHECK(pc.colors[0] == Color{10, 20, 30});
  CHECK(pc.colors[1] == Color{255, 0, 7});
}

TEST_CASE("binary reader with double coordinates") {
  gqe::testing::TempDir dir;
  std::string body = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty double x\n"
                     "property double y\nproperty double z\nproperty uchar red\nproperty uchar green\n"
                     "property uchar blue\nend_header\n";
  const double xyz[3] = {7.0, 8.0, 9.0};
  body.append(reinterpret_cast<const char*>(xyz), sizeof xyz);
  body += std::string("\x01\x02\x03", 3);
  write_text(dir / "b.ply", body);
  const PointCloud pc = read_ply(dir / "b.ply");
  CHECK(pc.coords[0] == Coord{7, 8, 9});
  CHECK(pc.colors[0] == Color{1, 2, 3});
}

TEST_CASE("ply reader errors") {
  gqe::testing::TempDir dir;
  const std::string head = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                           "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n";
  write_text(dir / "nomagic.ply", "plx\n");
  CHECK(code_of([&] { read_ply(dir / "nomagic.ply"); }) == ErrorCode::MalformedHeader);

  write_text(dir / "noend.ply", head);
  CHECK(code_of([&] { read_ply(dir / "noend.ply"); }) == ErrorCode::MalformedHeader);

  write_text(dir / "be.ply", "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
  CHECK(code_of([&] { read_ply(dir / "be.ply"); }) == ErrorCode::UnsupportedFormat);

  write_text(dir / "nored.ply",
             "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n"
             "end_header\n1 2 3\n");
  CHECK(code_of([&] { read_ply(dir / "nored.ply"); }) == ErrorCode::MissingProperty);

  write_text(dir / "short.ply", head + "end_header\n1 2 3 4 5 6\n");
  CHECK(code_of([&] { read_ply(dir / "short.ply"); }) == ErrorCode::TruncatedBody);

  CHECK(code_of([&] { read_ply(dir / "missing.ply"); }) == ErrorCode::IoFailure);
}

TEST_CASE("truncated binary body") {
  gqe::testing::TempDir dir;
  std::mt19937_64 rng(5);
  write_ply(gqe::testing::random_cloud(rng, 10, 50), dir / "c.ply", PlyEncoding::BinaryLittleEndian);
  const auto size = std::filesystem::file_size(dir / "c.ply");
  std::filesystem::resize_file(dir / "c.ply", size - 4);
  CHECK(code_of([&] { read_ply(dir / "c.ply"); }) == ErrorCode::TruncatedBody);
}

TEST_CASE("writer rounds fractional colours") {
  gqe::testing::TempDir dir;
  PointCloud pc;
  pc.coords = {{0, 0, 0}, {1, 1, 1}};
  pc.colors = {{0.5, 254.5, 99.49}, {0, 255, 1.5}};
  write_ply(pc, dir / "r.ply", PlyEncoding::Ascii);
  const PointCloud back = read_ply(dir / "r.ply");
  CHECK(back.colors[0] == Color{1, 255, 99});
  CHECK(back.colors[1] == Color{0, 255, 2});
  pc.colors[1][1] = 300;
  CHECK(code_of([&] { write_ply(pc, dir / "bad.ply", PlyEncoding::Ascii); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("pure red converts to the hand-evaluated YCbCr") {
  // Independent scalar evaluation of the full-range transform.
  const double kr = 0.2126, kb = 0.0722, kg = 1 - kr - kb;
  const double r = 255, g = 0, b = 0;
  const double y = kr * r + kg * g + kb * b;
  const double cb = 128 + (b - y) / (2 * (1 - kb));
  const double cr = 128 + (r - y) / (2 * (1 - kr));
  CHECK(y == doctest::Approx(54.213));
  CHECK(cr == doctest::Approx(255.5));

  PointCloud pc;
  pc.coords = {{0, 0, 0}};
  pc.colors = {{r, g, b}};
  const PointCloud ycc = rgb_to_ycbcr(pc);
  CHECK(ycc.color_space == ColorSpace::YCbCr8);
  CHECK(ycc.colors[0][0] == 54);
  CHECK(ycc.colors[0][1] == std::round(cb));
  CHECK(ycc.colors[0][2] == 255);  // 255.5 rounds to 256, then clamps
}

TEST_CASE("every 8-bit colour survives the round trip within one level") {
  PointCloud pc;
  pc.coords.assign(256 * 256, Coord{0, 0, 0});
  pc.colors.resize(256 * 256);
  int worst = 0;
  for (int r = 0; r < 256; ++r) {
    for (int g = 0; g < 256; ++g)
      for (int b = 0; b < 256; ++b) pc.colors[g * 256 + b] = {double(r), double(g), double(b)};
    const PointCloud back = ycbcr_to_rgb(rgb_to_ycbcr(pc));
    for (std::size_t i = 0; i < pc.size(); ++i)
      for (int c = 0; c < 3; ++c)
        worst = std::max(worst, int(std::abs(back.colors[i][c] - pc.colors[i][c])));
  }
  CHECK(worst <= 1);
}

TEST_CASE("conversion rejects the wrong tag") {
  PointCloud pc;
  pc.coords = {{0, 0, 0}};
  pc.colors = {{1, 2, 3}};
  CHECK(code_of([&] { ycbcr_to_rgb(pc); }) == ErrorCode::WrongColorSpace);
  pc.color_space = ColorSpace::YCbCr8;
  CHECK(code_of([&] { rgb_to_ycbcr(pc); }) == ErrorCode::WrongColorSpace);
}

TEST_CASE("rounding is half away from zero") {
  CHECK(round_clamp_8bit(2.5) == 3);
  CHECK(round_clamp_8bit(3.5) == 4);
  CHECK(round_clamp_8bit(-0.5) == 0);
  CHECK(round_clamp_8bit(255.49) == 255);
  CHECK(to_u8(1000) == 255);
}

TEST_CASE("point cloud validation") {
  PointCloud pc;
  CHECK(code_of([&] { pc.validate(); }) == ErrorCode::InvalidArgument);
  pc.coords = {{0, 0, 0}};
  pc.colors = {{1, 2, 256}};
  CHECK(code_of([&] { pc.validate(); }) == ErrorCode::InvalidArgument);
  pc.colors = {{1, 2, 3}};
  CHECK_NOTHROW(pc.validate());
  CHECK(parse_component("Cb") == Component::Cb);
  CHECK(std::string(component_name(Component::Cr)) == "Cr");
  CHECK(code_of([&] { parse_component("U"); }) == ErrorCode::InvalidArgument);
}

}  // TEST_SUITE
