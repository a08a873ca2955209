#include "gqe/patching.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

#include "gqe/error.hpp"
#include "gqe/parallel.hpp"
#include "gqe/spatial.hpp"

namespace gqe {
namespace {

constexpr char kManifestMagic[4] = {'G', 'Q', 'E', 'P'};
constexpr std::uint32_t kManifestVersion = 1;

Patch make_patch(const PointCloud& pc, std::vector<std::uint32_t> indices) {
  Patch p;
  p.coords.reserve(indices.size());
  p.colors.reserve(indices.size());
  for (auto i : indices) {
    p.coords.push_back(pc.coords[i]);
    p.colors.push_back(pc.colors[i]);
  }
  p.point_indices = std::move(indices);
  return p;
}

std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v & 0x1fffff;
  x = (x | x << 32) & 0x1f00000000ffffULL;
  x = (x | x << 16) & 0x1f0000ff0000ffULL;
  x = (x | x << 8) & 0x100f00f00f00f00fULL;
  x = (x | x << 4) & 0x10c30c30c30c30c3ULL;
  x = (x | x << 2) & 0x1249249249249249ULL;
  return x;
}

template <typename V>
void put(std::ostream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::istream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (in.gcount() != sizeof(V)) throw Error(ErrorCode::TruncatedBody, "patch manifest truncated");
  return v;
}

}  // namespace

std::size_t patch_count(std::size_t num_points, double r, std::size_t n) {
  if (n < 1 || num_points < n) {
    throw Error(ErrorCode::InvalidArgument,
                "patch size n=" + std::to_string(n) + " needs 1 <= n <= N=" + std::to_string(num_points));
  }
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::InvalidArgument, "overlap ratio must be > 0");
  return static_cast<std::size_t>(std::ceil(static_cast<double>(num_points) * r / static_cast<double>(n)));
}

PatchSet extract_patches(const PointCloud& pc, std::size_t n, double r, std::size_t start, std::size_t workers) {
  const std::size_t m = patch_count(pc.size(), r, n);
  if (m > pc.size()) throw Error(ErrorCode::InvalidArgument, "overlap ratio yields more patches than points");
  const auto points = to_points(pc.coords);
  const auto keys = farthest_point_sample(points, m, start);
  const KdTree tree(points);

  PatchSet ps;
  ps.n = n;
  ps.r = r;
  ps.parent_size = pc.size();
  ps.patches.resize(m);
  parallel_for(m, workers, [&](std::size_t p) {
    std::vector<std::uint32_t> idx(n);
    tree.knn(points[keys[p]], n, idx);
    // The key point leads the patch even if a duplicate with a lower index
    // sits at the same position.
    auto it = std::find(idx.begin(), idx.end(), keys[p]);
    if (it == idx.end()) {
      idx.back() = keys[p];
      it = idx.end() - 1;
    }
    std::rotate(idx.begin(), it, it + 1);
    ps.patches[p] = make_patch(pc, std::move(idx));
  });
  return ps;
}

PatchSet extract_patches_sequential(const PointCloud& pc, std::size_t n) {
  const std::size_t m = patch_count(pc.size(), 1.0, n);
  std::vector<std::uint32_t> order(pc.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::uint64_t> code(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const auto& c = pc.coords[i];
    code[i] = spread_bits(static_cast<std::uint32_t>(c[0])) << 2 | spread_bits(static_cast<std::uint32_t>(c[1])) << 1 |
              spread_bits(static_cast<std::uint32_t>(c[2]));
  }
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return code[a] < code[b]; });

  PatchSet ps;
  ps.n = n;
  ps.r = 1.0;
  ps.parent_size = pc.size();
  for (std::size_t p = 0; p < m; ++p) {
    const std::size_t begin = std::min(p * n, pc.size() - n);
    ps.patches.push_back(make_patch(pc, {order.begin() + begin, order.begin() + begin + n}));
  }
  return ps;
}

std::size_t count_uncovered(const PatchSet& ps) {
  std::vector<char> seen(ps.parent_size, 0);
  for (const auto& p : ps.patches) {
    for (auto i : p.point_indices) seen[i] = 1;
  }
  return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 0));
}

PointCloud fuse_patches(const PointCloud& pc, const PatchSet& ps, std::span<const double> enhanced,
                        Component component) {
  if (ps.parent_size != pc.size()) throw Error(ErrorCode::ShapeMismatch, "patch set belongs to another cloud");
  if (enhanced.size() != ps.size() * ps.n) {
    throw Error(ErrorCode::ShapeMismatch, "enhanced values: expected " + std::to_string(ps.size() * ps.n) +
                                              ", got " + std::to_string(enhanced.size()));
  }
  std::vector<double> sum(pc.size(), 0.0);
  std::vector<std::uint32_t> count(pc.size(), 0);
  for (std::size_t p = 0; p < ps.size(); ++p) {
    const auto& idx = ps.patches[p].point_indices;
    if (idx.size() != ps.n) throw Error(ErrorCode::ShapeMismatch, "patch has wrong size");
    for (std::size_t j = 0; j < ps.n; ++j) {
      if (idx[j] >= pc.size()) throw Error(ErrorCode::IndexOutOfRange, "patch index out of range");
      sum[idx[j]] += enhanced[p * ps.n + j];
      ++count[idx[j]];
    }
  }
  PointCloud out = pc;
  const int c = static_cast<int>(component);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if (count[i] > 0) out.colors[i][c] = sum[i] / count[i];
  }
  return out;
}

void write_patch_manifest(const PatchSet& ps, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out.write(kManifestMagic, 4);
  put<std::uint32_t>(out, kManifestVersion);
  put<std::uint64_t>(out, ps.parent_size);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ps.n));
  put<double>(out, ps.r);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ps.size()));
  for (const auto& p : ps.patches) {
    out.write(reinterpret_cast<const char*>(p.point_indices.data()),
              static_cast<std::streamsize>(p.point_indices.size() * sizeof(std::uint32_t)));
  }
  if (!out) throw Error(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

PatchSet read_patch_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, kManifestMagic, 4) != 0) {
    throw Error(ErrorCode::BadMagic, "not a patch manifest");
  }
  if (get<std::uint32_t>(in) != kManifestVersion) throw Error(ErrorCode::VersionUnsupported, "manifest version");
  PatchSet ps;
  ps.parent_size = get<std::uint64_t>(in);
  ps.n = get<std::uint32_t>(in);
  ps.r = get<double>(in);
  const auto m = get<std::uint32_t>(in);
  ps.patches.resize(m);
  for (auto& p : ps.patches) {
    p.point_indices.resize(ps.n);
    for (auto& i : p.point_indices) i = get<std::uint32_t>(in);
  }
  return ps;
}

}  // namespace gqe
