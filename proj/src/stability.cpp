#include "rwcp/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rwcp/conformal.hpp"
#include "rwcp/error.hpp"

namespace rwcp {

SetSizeCurve set_size_curve(const ProbMap& scores, double step) {
  if (!(step > 0.0 && step <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda step must lie in (0, 1]");
  }
  const auto n = static_cast<std::size_t>(std::llround(1.0 / step));
  std::vector<double> entry(scores.size());
  for (std::size_t p = 0; p < entry.size(); ++p) entry[p] = inclusion_lambda(scores[p]);
  std::sort(entry.begin(), entry.end());

  SetSizeCurve c;
  c.lambdas.resize(n + 1);
  c.sizes.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double lambda = i == n ? 1.0 : static_cast<double>(i) * step;
    c.lambdas[i] = lambda;
    c.sizes[i] = static_cast<std::size_t>(
        std::upper_bound(entry.begin(), entry.end(), lambda) - entry.begin());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double jump = static_cast<double>(c.sizes[i + 1] - c.sizes[i]);
    c.max_rate = std::max(c.max_rate, jump / (c.lambdas[i + 1] - c.lambdas[i]));
  }
  return c;
}

StabilityReport stability_report(const ProbMap& prob, const FeatureMap& features,
                                 const DiffusionConfig& cfg, double step) {
  StabilityReport r;
  r.raw = set_size_curve(prob, step);
  r.diffused = set_size_curve(diffuse_full(prob, features, cfg), step);
  r.reduction = r.diffused.max_rate > 0.0 ? r.raw.max_rate / r.diffused.max_rate
                                          : std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace rwcp
