#pragma once

#include <cstddef>
#include <vector>

#include "rwcp/diffusion.hpp"
#include "rwcp/grid.hpp"

namespace rwcp {

// |C_lambda| on the uniform grid lambda_i = i * step, i = 0 .. round(1 / step).
struct SetSizeCurve {
  std::vector<double> lambdas;
  std::vector<std::size_t> sizes;
  // max_i |sizes[i+1] - sizes[i]| / step
  double max_rate = 0.0;
};

SetSizeCurve set_size_curve(const ProbMap& scores, double step = 0.005);

struct StabilityReport {
  SetSizeCurve raw;
  SetSizeCurve diffused;
  // raw.max_rate / diffused.max_rate (infinity if the diffused rate is 0)
  double reduction = 0.0;
};

StabilityReport stability_report(const ProbMap& prob, const FeatureMap& features,
                                 const DiffusionConfig& cfg, double step = 0.005);

}  // namespace rwcp
