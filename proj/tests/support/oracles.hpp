#pragma once

// Slow reference implementations the tests compare against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "gqe/autograd.hpp"
#include "gqe/ops.hpp"
#include "gqe/point_cloud.hpp"
#include "gqe/spatial.hpp"

namespace gqe::testing {

inline std::vector<Point3> random_points(std::mt19937_64& rng, std::size_t n, int extent) {
  // Integer lattice coordinates so duplicates and distance ties are common.
  std::uniform_int_distribution<int> d(0, extent);
  std::vector<Point3> pts(n);
  for (auto& p : pts) p = {double(d(rng)), double(d(rng)), double(d(rng))};
  return pts;
}

inline PointCloud random_cloud(std::mt19937_64& rng, std::size_t n, int extent, ColorSpace cs = ColorSpace::RGB8) {
  std::uniform_int_distribution<int> d(0, extent), c(0, 255);
  PointCloud pc;
  pc.color_space = cs;
  for (std::size_t i = 0; i < n; ++i) {
    pc.coords.push_back({d(rng), d(rng), d(rng)});
    pc.colors.push_back({double(c(rng)), double(c(rng)), double(c(rng))});
  }
  return pc;
}

inline std::vector<std::uint32_t> brute_fps(const std::vector<Point3>& pts, std::size_t m, std::size_t start) {
  std::vector<std::uint32_t> picked{static_cast<std::uint32_t>(start)};
  while (picked.size() < m) {
    double best = -1;
    std::uint32_t arg = 0;
    for (std::uint32_t i = 0; i < pts.size(); ++i) {
      double dmin = std::numeric_limits<double>::infinity();
      for (auto p : picked) dmin = std::min(dmin, squared_distance(pts[i], pts[p]));
      if (dmin > best) {
        best = dmin;
        arg = i;
      }
    }
    picked.push_back(arg);
  }
  return picked;
}

inline std::vector<std::uint32_t> brute_knn(const std::vector<Point3>& pts, const Point3& q, std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> all(pts.size());
  for (std::uint32_t i = 0; i < pts.size(); ++i) all[i] = {squared_distance(pts[i], q), i};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
  std::vector<std::uint32_t> idx(k);
  for (std::size_t i = 0; i < k; ++i) idx[i] = all[i].second;
  return idx;
}

inline tg::Tensor<double> random_tensor(std::mt19937_64& rng, tg::Shape shape, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  tg::Tensor<double> t(std::move(shape));
  for (auto& v : t.storage()) v = u(rng);
  return t;
}

// Builds a scalar from the inputs on a fresh tape.
using ScalarFn = std::function<tg::Var<double>(tg::Tape<double>&, const std::vector<tg::Var<double>>&)>;

struct GradCheck {
  double rel_error = 0;  // ||analytic - numeric|| / (||analytic|| + ||numeric||)
  double max_abs = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // stencil straddled a kink
};

// Central differences with step h over every input element.
inline GradCheck check_gradients(const ScalarFn& f, std::vector<tg::Tensor<double>> inputs, double h = 1e-5) {
  std::vector<tg::Tensor<double>> analytic;
  {
    tg::Tape<double> tape;
    std::vector<tg::Var<double>> vars;
    for (auto& t : inputs) vars.push_back(tape.leaf(t, true));
    tape.backward(f(tape, vars));
    for (auto& v : vars) analytic.push_back(v.grad());
  }
  auto eval = [&]() {
    tg::Tape<double> tape;
    std::vector<tg::Var<double>> vars;
    for (auto& t : inputs) vars.push_back(tape.leaf(t, false));
    return f(tape, vars).value()[0];
  };
  GradCheck r;
  double diff2 = 0, a2 = 0, n2 = 0;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    for (std::size_t i = 0; i < inputs[t].size(); ++i) {
      const double orig = inputs[t][i];
      inputs[t][i] = orig + h;
      const double fp = eval();
      inputs[t][i] = orig - h;
      const double fm = eval();
      inputs[t][i] = orig;
      const double num = (fp - fm) / (2 * h);
      const double an = analytic[t][i];
      diff2 += (an - num) * (an - num);
      a2 += an * an;
      n2 += num * num;
      r.max_abs = std::max(r.max_abs, std::abs(an - num));
      ++r.checked;
    }
  }
  const double denom = std::sqrt(a2) + std::sqrt(n2);
  r.rel_error = denom > 0 ? std::sqrt(diff2) / denom : 0.0;
  return r;
}

// sum(out * probe) with a fixed random probe, so every output element
// contributes a distinct weight to the scalar.
inline tg::Var<double> project(tg::Tape<double>& tape, const tg::Var<double>& out, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  auto probe = tape.constant(random_tensor(rng, out.shape()));
  return tg::sum(tape, tg::mul(tape, out, probe));
}

// Cyclic Jacobi eigen-decomposition of a symmetric 3x3 matrix. Returns the
// eigenvector of the smallest eigenvalue.
inline Point3 jacobi_smallest_eigenvector(std::array<std::array<double, 3>, 3> a) {
  std::array<std::array<double, 3>, 3> v{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if (off < 1e-30) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  int j = 0;
  for (int i = 1; i < 3; ++i)
    if (a[i][i] < a[j][j]) j = i;
  return {v[0][j], v[1][j], v[2][j]};
}

}  // namespace gqe::testing

#include <unistd.h>

#include <filesystem>
#include <optional>

#include "gqe/error.hpp"

namespace gqe::testing {

template <typename F>
std::optional<ErrorCode> code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Per-test scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("gqe_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

}  // namespace gqe::testing
