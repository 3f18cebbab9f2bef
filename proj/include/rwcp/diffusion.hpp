#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>

#include "rwcp/graph.hpp"
#include "rwcp/grid.hpp"

namespace rwcp {

struct DiffusionConfig {
  std::size_t n_step = 10;
  GraphConfig graph;

  void validate() const;
};

// S <- P S, n_step times. Throws DimensionMismatch when the map and matrix
// disagree on pixel count.
ProbMap diffuse(const ProbMap& s0, const TransitionMatrix& p, std::size_t n_step);

// Resamples s0 to the feature grid, diffuses over the feature graph and
// resamples back to s0's shape. When `dump_dir` is set every intermediate
// map is written there as step_<t>.npy.
ProbMap diffuse_full(const ProbMap& s0, const FeatureMap& features, const DiffusionConfig& cfg,
                     const std::optional<std::filesystem::path>& dump_dir = std::nullopt);

}  // namespace rwcp
