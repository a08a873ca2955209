#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "gqe/point_cloud.hpp"

namespace gqe {

// Reported for identical signals.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// 10*log10(peak^2 / MSE) over one channel. Both clouds must be YCbCr8 with
// identical coordinates in identical order.
double psnr(const PointCloud& ref, const PointCloud& test, Component component, double peak = 255.0);

struct YCbCrWeights {
  double y = 6.0;
  double cb = 1.0;
  double cr = 1.0;
};

double combine_psnr(double y, double cb, double cr, const YCbCrWeights& w = {});

struct PsnrReport {
  double y = 0, cb = 0, cr = 0, ycbcr = 0;
};

PsnrReport psnr_report(const PointCloud& ref, const PointCloud& test, const YCbCrWeights& w = {});

inline double ycbcr_psnr(const PointCloud& ref, const PointCloud& test, const YCbCrWeights& w = {}) {
  return psnr_report(ref, test, w).ycbcr;
}

struct RDPoint {
  double bitrate = 0;  // bits per input point
  double psnr = 0;     // dB
};

struct RDCurve {
  std::vector<RDPoint> points;
  std::string label;
};

// Two columns per line: bpip, dB. A non-numeric first line is a header.
RDCurve read_rd_curve_csv(const std::filesystem::path& path);

enum class BdMode { Psnr, Rate };

// Bjontegaard delta with cubic fits: BD-PSNR in dB (fit of PSNR over
// log10 rate) or BD-rate in percent (fit of log10 rate over PSNR). Points
// with infinite PSNR are dropped with a warning on stderr.
double bd_metric(const RDCurve& anchor, const RDCurve& test, BdMode mode);

}  // namespace gqe
