#include "gqe/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gqe/error.hpp"

namespace gqe {

double psnr(const PointCloud& ref, const PointCloud& test, Component component, double peak) {
  if (ref.color_space != ColorSpace::YCbCr8 || test.color_space != ColorSpace::YCbCr8) {
    throw Error(ErrorCode::WrongColorSpace, "PSNR is computed on YCbCr8 clouds");
  }
  if (ref.size() != test.size() || ref.coords != test.coords) {
    throw Error(ErrorCode::GeometryMismatch, "reference and test geometry differ");
  }
  if (ref.size() == 0) throw Error(ErrorCode::InvalidArgument, "PSNR of empty clouds");
  const int c = static_cast<int>(component);
  double se = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref.colors[i][c] - test.colors[i][c];
    se += d * d;
  }
  if (se == 0.0) return kInfinitePsnr;
  const double mse = se / double(ref.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double combine_psnr(double y, double cb, double cr, const YCbCrWeights& w) {
  return (w.y * y + w.cb * cb + w.cr * cr) / (w.y + w.cb + w.cr);
}

PsnrReport psnr_report(const PointCloud& ref, const PointCloud& test, const YCbCrWeights& w) {
  PsnrReport r;
  r.y = psnr(ref, test, Component::Y);
  r.cb = psnr(ref, test, Component::Cb);
  r.cr = psnr(ref, test, Component::Cr);
  r.ycbcr = combine_psnr(r.y, r.cb, r.cr, w);
  return r;
}

RDCurve read_rd_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  RDCurve curve;
  curve.label = path.stem().string();
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    RDPoint p;
    if (!(ls >> p.bitrate >> p.psnr)) {
      if (first) {
        first = false;
        continue;
      }
      throw Error(ErrorCode::InvalidArgument, "bad RD line in '" + path.string() + "': " + line);
    }
    first = false;
    curve.points.push_back(p);
  }
  return curve;
}

namespace {

struct Cubic {
  double center = 0;
  Eigen::Vector4d coef;  // in powers of (x - center)

  // Integral over [a, b].
  double integrate(double a, double b) const {
    auto prim = [&](double x) {
      const double t = x - center;
      return coef[0] * t + coef[1] * t * t / 2 + coef[2] * t * t * t / 3 + coef[3] * t * t * t * t / 4;
    };
    return prim(b) - prim(a);
  }
};

Cubic fit_cubic(const std::vector<double>& x, const std::vector<double>& y) {
  Cubic c;
  c.center = (*std::min_element(x.begin(), x.end()) + *std::max_element(x.begin(), x.end())) / 2;
  Eigen::MatrixXd v(x.size(), 4);
  Eigen::VectorXd rhs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = x[i] - c.center;
    v(i, 0) = 1;
    v(i, 1) = t;
    v(i, 2) = t * t;
    v(i, 3) = t * t * t;
    rhs[i] = y[i];
  }
  c.coef = v.colPivHouseholderQr().solve(rhs);
  return c;
}

std::vector<RDPoint> usable_points(const RDCurve& curve, const char* role) {
  std::vector<RDPoint> pts;
  for (const auto& p : curve.points) {
    if (std::isinf(p.psnr)) {
      std::cerr << "warning: dropping infinite-PSNR point from " << role << " curve\n";
      continue;
    }
    if (!(p.bitrate > 0) || !std::isfinite(p.psnr)) {
      throw Error(ErrorCode::InvalidArgument, std::string(role) + " curve has a non-positive rate or NaN PSNR");
    }
    pts.push_back(p);
  }
  if (pts.size() < 4) {
    throw Error(ErrorCode::InsufficientPoints,
                std::string(role) + " curve has " + std::to_string(pts.size()) + " usable points, need 4");
  }
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (!(pts[i].bitrate > pts[i - 1].bitrate)) {
      throw Error(ErrorCode::InvalidArgument, std::string(role) + " curve bitrates must strictly increase");
    }
  }
  return pts;
}

}  // namespace

double bd_metric(const RDCurve& anchor, const RDCurve& test, BdMode mode) {
  const auto a = usable_points(anchor, "anchor");
  const auto b = usable_points(test, "test");
  std::vector<double> ra, pa, rb, pb;
  for (const auto& p : a) {
    ra.push_back(std::log10(p.bitrate));
    pa.push_back(p.psnr);
  }
  for (const auto& p : b) {
    rb.push_back(std::log10(p.bitrate));
    pb.push_back(p.psnr);
  }
  // Independent variable and fitted quantity per mode.
  const auto& xa = mode == BdMode::Psnr ? ra : pa;
  const auto& ya = mode == BdMode::Psnr ? pa : ra;
  const auto& xb = mode == BdMode::Psnr ? rb : pb;
  const auto& yb = mode == BdMode::Psnr ? pb : rb;

  const double lo = std::max(*std::min_element(xa.begin(), xa.end()), *std::min_element(xb.begin(), xb.end()));
  const double hi = std::min(*std::max_element(xa.begin(), xa.end()), *std::max_element(xb.begin(), xb.end()));
  if (!(hi > lo)) throw Error(ErrorCode::NoOverlap, "RD curves do not overlap");

  const Cubic fa = fit_cubic(xa, ya);
  const Cubic fb = fit_cubic(xb, yb);
  const double avg = (fb.integrate(lo, hi) - fa.integrate(lo, hi)) / (hi - lo);
  if (mode == BdMode::Psnr) return avg;
  return 100.0 * (std::pow(10.0, avg) - 1.0);
}

}  // namespace gqe
