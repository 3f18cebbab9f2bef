#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rwcp/grid.hpp"
#include "rwcp/kernels.hpp"

namespace rwcp {

struct GraphConfig {
  std::size_t k = 20;
  double beta = 50.0;

  void validate() const;
};

// k nearest neighbors of every pixel in embedding space. The pixel itself is
// always the first entry (distance 0); the rest ascend by distance with ties
// broken by ascending index.
class NeighborList {
 public:
  explicit NeighborList(kernels::KnnTable table);

  std::size_t num_pixels() const noexcept { return per_row_ == 0 ? 0 : index_.size() / per_row_; }
  std::size_t per_row() const noexcept { return per_row_; }
  std::span<const std::uint32_t> neighbors(std::size_t pixel) const noexcept {
    return std::span<const std::uint32_t>(index_).subspan(pixel * per_row_, per_row_);
  }
  std::span<const double> distances(std::size_t pixel) const noexcept {
    return std::span<const double>(distance_).subspan(pixel * per_row_, per_row_);
  }

  friend bool operator==(const NeighborList&, const NeighborList&) = default;

 private:
  std::size_t per_row_;
  std::vector<std::uint32_t> index_;
  std::vector<double> distance_;
};

// Kernel weights exp(-beta * dist) laid out like the NeighborList that
// produced them (rank order, not column order).
struct RawAdjacency {
  std::size_t per_row = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> weight;
};

// Row-stochastic sparse matrix; within a row columns strictly increase.
class TransitionMatrix {
 public:
  explicit TransitionMatrix(kernels::CsrMatrix csr);

  std::size_t num_pixels() const noexcept { return csr_.rows; }
  const kernels::CsrMatrix& csr() const noexcept { return csr_; }
  std::span<const std::uint32_t> row_columns(std::size_t row) const noexcept;
  std::span<const double> row_weights(std::size_t row) const noexcept;

  // Writes "row,col,weight" lines.
  void dump_csv(const std::filesystem::path& path) const;

  friend bool operator==(const TransitionMatrix& a, const TransitionMatrix& b) {
    return a.csr_.rows == b.csr_.rows && a.csr_.row_ptr == b.csr_.row_ptr &&
           a.csr_.col == b.csr_.col && a.csr_.val == b.csr_.val;
  }

 private:
  kernels::CsrMatrix csr_;
};

// Exact cosine kNN over all pixel pairs. Throws ZeroVector, InvalidArgument (k == 0).
NeighborList knn_search(const FeatureMap& features, std::size_t k);

RawAdjacency transition_weights(const NeighborList& neighbors, double beta);

// Divides every row by its sum. Throws DegenerateRow when a row sums to 0.
TransitionMatrix row_normalize(const RawAdjacency& raw);

TransitionMatrix build_transition_matrix(const FeatureMap& features, const GraphConfig& cfg);

}  // namespace rwcp
