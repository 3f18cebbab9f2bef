#include "rwcp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rwcp/error.hpp"
#include "rwcp/kernels.hpp"

namespace rwcp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double coverage(const BinaryMask& c, const BinaryMask& y) {
  const std::size_t pos = y.count();
  if (pos == 0) throw Error(ErrorKind::EmptyGroundTruth, "coverage needs a nonempty ground truth");
  return static_cast<double>(intersection_count(c, y)) / static_cast<double>(pos);
}

double stretch(const BinaryMask& c, const BinaryMask& y_hat) {
  require_same_shape(c.height(), c.width(), y_hat.height(), y_hat.width(), "stretch");
  const std::size_t base = y_hat.count();
  if (base == 0) throw Error(ErrorKind::EmptyBasePrediction, "stretch needs a nonempty base mask");
  return static_cast<double>(c.count()) / static_cast<double>(base);
}

double dsc(const BinaryMask& c, const BinaryMask& y) {
  const std::size_t inter = intersection_count(c, y);
  const std::size_t total = c.count() + y.count();
  if (total == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(total);
}

namespace {

std::vector<double> directed(const BinaryMask& from_contour, const std::vector<double>& edt_to,
                             double spacing) {
  std::vector<double> out;
  for (std::size_t p = 0; p < from_contour.size(); ++p) {
    if (from_contour[p]) out.push_back(std::sqrt(edt_to[p]) * spacing);
  }
  return out;
}

// Both directions in one ascending list, so results do not depend on argument order.
std::vector<double> pooled(SurfaceDistances d) {
  d.a_to_b.insert(d.a_to_b.end(), d.b_to_a.begin(), d.b_to_a.end());
  std::sort(d.a_to_b.begin(), d.a_to_b.end());
  return std::move(d.a_to_b);
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

SurfaceDistances surface_distances(const BinaryMask& a, const BinaryMask& b,
                                   const MetricOptions& opts) {
  require_same_shape(a.height(), a.width(), b.height(), b.width(), "surface distance");
  const BinaryMask ca = extract_contour(a, opts.contour);
  const BinaryMask cb = extract_contour(b, opts.contour);
  const auto to_a = kernels::edt_squared_parallel(ca.values(), a.height(), a.width());
  const auto to_b = kernels::edt_squared_parallel(cb.values(), b.height(), b.width());
  return {directed(ca, to_b, opts.spacing), directed(cb, to_a, opts.spacing)};
}

double assd(const BinaryMask& c, const BinaryMask& y, const MetricOptions& opts) {
  return mean_of(pooled(surface_distances(c, y, opts)));
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::InvalidArgument, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (values[hi] - values[lo]) * (rank - static_cast<double>(lo));
}

double hd95(const BinaryMask& c, const BinaryMask& y, const MetricOptions& opts) {
  return percentile(pooled(surface_distances(c, y, opts)), 0.95);
}

double hd100(const BinaryMask& c, const BinaryMask& y, const MetricOptions& opts) {
  const auto d = surface_distances(c, y, opts);
  return std::max(*std::max_element(d.a_to_b.begin(), d.a_to_b.end()),
                  *std::max_element(d.b_to_a.begin(), d.b_to_a.end()));
}

std::string flags_to_string(unsigned flags) {
  std::string s;
  auto add = [&](const char* name) {
    if (!s.empty()) s += '|';
    s += name;
  };
  if (flags & kEmptyGroundTruth) add("empty_ground_truth");
  if (flags & kEmptyBasePrediction) add("empty_base_prediction");
  if (flags & kEmptySet) add("empty_set");
  return s;
}

MetricReport evaluate(const BinaryMask& c, const BinaryMask& y, const BinaryMask& y_hat,
                      const MetricOptions& opts) {
  require_same_shape(c.height(), c.width(), y.height(), y.width(), "evaluate");
  MetricReport r{kNaN, kNaN, dsc(c, y), kNaN, kNaN, 0};
  if (y.empty()) {
    r.flags |= kEmptyGroundTruth;
  } else {
    r.coverage = coverage(c, y);
  }
  if (y_hat.empty()) {
    r.flags |= kEmptyBasePrediction;
  } else {
    r.stretch = stretch(c, y_hat);
  }
  if (c.empty()) r.flags |= kEmptySet;
  if (!c.empty() && !y.empty()) {
    auto d = pooled(surface_distances(c, y, opts));
    r.assd = mean_of(d);
    r.hd95 = percentile(std::move(d), 0.95);
  }
  return r;
}

namespace {

template <class Get>
MetricStat stat_of(std::span<const MetricReport> reports, Get get) {
  MetricStat s;
  double sum = 0.0;
  for (const auto& r : reports) {
    const double v = get(r);
    if (std::isnan(v)) continue;
    sum += v;
    ++s.count;
  }
  if (s.count == 0) {
    s.mean = kNaN;
    return s;
  }
  s.mean = sum / static_cast<double>(s.count);
  if (s.count > 1) {
    double sq = 0.0;
    for (const auto& r : reports) {
      const double v = get(r);
      if (!std::isnan(v)) sq += (v - s.mean) * (v - s.mean);
    }
    s.stddev = std::sqrt(sq / static_cast<double>(s.count - 1));
  }
  return s;
}

}  // namespace

MetricSummary summarize(std::span<const MetricReport> reports) {
  MetricSummary s;
  s.images = reports.size();
  for (const auto& r : reports) s.degenerate += r.flags != 0;
  s.coverage = stat_of(reports, [](const MetricReport& r) { return r.coverage; });
  s.stretch = stat_of(reports, [](const MetricReport& r) { return r.stretch; });
  s.dsc = stat_of(reports, [](const MetricReport& r) { return r.dsc; });
  s.assd = stat_of(reports, [](const MetricReport& r) { return r.assd; });
  s.hd95 = stat_of(reports, [](const MetricReport& r) { return r.hd95; });
  return s;
}

}  // namespace rwcp
