#include "rwcp/diffusion.hpp"

#include <string>
#include <vector>

#include "rwcp/error.hpp"
#include "rwcp/kernels.hpp"
#include "rwcp/resample.hpp"
#include "rwcp/tensor_io.hpp"

namespace rwcp {

void DiffusionConfig::validate() const { graph.validate(); }

namespace {

ProbMap diffuse_impl(const ProbMap& s0, const TransitionMatrix& p, std::size_t n_step,
                     const std::optional<std::filesystem::path>& dump_dir) {
  if (s0.size() != p.num_pixels()) {
    throw Error(ErrorKind::DimensionMismatch, "map has " + std::to_string(s0.size()) +
                                                  " pixels, transition matrix " +
                                                  std::to_string(p.num_pixels()));
  }
  if (dump_dir) save_tensor(s0, *dump_dir / "step_0.npy");
  if (n_step == 0) return s0;
  std::vector<double> cur(s0.values().begin(), s0.values().end());
  std::vector<double> next(cur.size());
  for (std::size_t t = 0; t < n_step; ++t) {
    kernels::spmv_parallel(p.csr(), cur, next);
    cur.swap(next);
    if (dump_dir) {
      save_tensor(ProbMap(s0.height(), s0.width(), cur),
                  *dump_dir / ("step_" + std::to_string(t + 1) + ".npy"));
    }
  }
  return ProbMap(s0.height(), s0.width(), std::move(cur));
}

}  // namespace

ProbMap diffuse(const ProbMap& s0, const TransitionMatrix& p, std::size_t n_step) {
  return diffuse_impl(s0, p, n_step, std::nullopt);
}

ProbMap diffuse_full(const ProbMap& s0, const FeatureMap& features, const DiffusionConfig& cfg,
                     const std::optional<std::filesystem::path>& dump_dir) {
  cfg.validate();
  if (cfg.n_step == 0 && !dump_dir) {
    return resample_bilinear(resample_bilinear(s0, features.height(), features.width()),
                             s0.height(), s0.width());
  }
  const ProbMap coarse = resample_bilinear(s0, features.height(), features.width());
  const TransitionMatrix p = build_transition_matrix(features, cfg.graph);
  const ProbMap diffused = diffuse_impl(coarse, p, cfg.n_step, dump_dir);
  return resample_bilinear(diffused, s0.height(), s0.width());
}

}  // namespace rwcp
