#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rwcp/grid.hpp"
#include "rwcp/morphology.hpp"

namespace rwcp {

struct MetricOptions {
  double spacing = 1.0;  // physical size of one pixel; distances are multiplied by it
  Connectivity contour = Connectivity::Four;
};

// |C n Y| / |Y|. Throws EmptyGroundTruth.
double coverage(const BinaryMask& c, const BinaryMask& y);
// |C| / |Y_hat|. Throws EmptyBasePrediction.
double stretch(const BinaryMask& c, const BinaryMask& y_hat);
// 2 |C n Y| / (|C| + |Y|); 1 when both are empty.
double dsc(const BinaryMask& c, const BinaryMask& y);

// Directed contour-to-contour distances, in contour pixel order (row-major).
struct SurfaceDistances {
  std::vector<double> a_to_b;
  std::vector<double> b_to_a;
};

// Throws EmptyMask if either mask is empty.
SurfaceDistances surface_distances(const BinaryMask& a, const BinaryMask& b,
                                   const MetricOptions& opts = {});

double assd(const BinaryMask& c, const BinaryMask& y, const MetricOptions& opts = {});
// 95th percentile of the pooled directed distances.
double hd95(const BinaryMask& c, const BinaryMask& y, const MetricOptions& opts = {});
// Classic Hausdorff distance (maximum of both directed maxima).
double hd100(const BinaryMask& c, const BinaryMask& y, const MetricOptions& opts = {});

// q in [0, 1], linear interpolation between closest ranks. Sorts a copy.
double percentile(std::vector<double> values, double q);

enum MetricFlag : unsigned {
  kEmptyGroundTruth = 1u << 0,
  kEmptyBasePrediction = 1u << 1,
  kEmptySet = 1u << 2,
};

// Degenerate entries are NaN and marked in `flags`.
struct MetricReport {
  double coverage;
  double stretch;
  double dsc;
  double assd;
  double hd95;
  unsigned flags = 0;
};

std::string flags_to_string(unsigned flags);

// c: prediction set, y: ground truth, y_hat: base model mask.
MetricReport evaluate(const BinaryMask& c, const BinaryMask& y, const BinaryMask& y_hat,
                      const MetricOptions& opts = {});

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for fewer than two values
  std::size_t count = 0;
};

struct MetricSummary {
  MetricStat coverage, stretch, dsc, assd, hd95;
  std::size_t images = 0;
  std::size_t degenerate = 0;
};

// NaN entries are skipped per metric.
MetricSummary summarize(std::span<const MetricReport> reports);

}  // namespace rwcp
