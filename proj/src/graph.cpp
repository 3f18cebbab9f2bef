#include "rwcp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "rwcp/error.hpp"
#include "rwcp/tensor_io.hpp"

namespace rwcp {

void GraphConfig::validate() const {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorKind::InvalidArgument, "beta must be positive and finite");
  }
}

NeighborList::NeighborList(kernels::KnnTable table)
    : per_row_(table.per_row), index_(std::move(table.index)), distance_(std::move(table.distance)) {}

TransitionMatrix::TransitionMatrix(kernels::CsrMatrix csr) : csr_(std::move(csr)) {}

std::span<const std::uint32_t> TransitionMatrix::row_columns(std::size_t row) const noexcept {
  return std::span<const std::uint32_t>(csr_.col).subspan(
      csr_.row_ptr[row], csr_.row_ptr[row + 1] - csr_.row_ptr[row]);
}

std::span<const double> TransitionMatrix::row_weights(std::size_t row) const noexcept {
  return std::span<const double>(csr_.val).subspan(csr_.row_ptr[row],
                                                   csr_.row_ptr[row + 1] - csr_.row_ptr[row]);
}

void TransitionMatrix::dump_csv(const std::filesystem::path& path) const {
  std::ostringstream out;
  out.precision(17);
  out << "row,col,weight\n";
  for (std::size_t r = 0; r < csr_.rows; ++r) {
    for (std::size_t e = csr_.row_ptr[r]; e < csr_.row_ptr[r + 1]; ++e) {
      out << r << ',' << csr_.col[e] << ',' << csr_.val[e] << '\n';
    }
  }
  write_file_atomic(path, out.str());
}

NeighborList knn_search(const FeatureMap& features, std::size_t k) {
  return NeighborList(kernels::knn_parallel(features, k));
}

RawAdjacency transition_weights(const NeighborList& neighbors, double beta) {
  if (!(beta > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
  RawAdjacency raw;
  raw.per_row = neighbors.per_row();
  const std::size_t m = neighbors.num_pixels();
  raw.index.reserve(m * raw.per_row);
  raw.weight.reserve(m * raw.per_row);
  for (std::size_t p = 0; p < m; ++p) {
    auto idx = neighbors.neighbors(p);
    auto dist = neighbors.distances(p);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      raw.index.push_back(idx[r]);
      raw.weight.push_back(std::exp(-beta * dist[r]));
    }
  }
  return raw;
}

TransitionMatrix row_normalize(const RawAdjacency& raw) {
  kernels::CsrMatrix csr;
  const std::size_t k = raw.per_row;
  csr.rows = k == 0 ? 0 : raw.index.size() / k;
  csr.row_ptr.resize(csr.rows + 1);
  csr.col.resize(raw.index.size());
  csr.val.resize(raw.weight.size());

  std::vector<std::size_t> order(k);
  for (std::size_t r = 0; r < csr.rows; ++r) {
    const std::size_t base = r * k;
    csr.row_ptr[r] = base;
    // Sum in rank order (nearest first) so the total does not depend on layout.
    double total = 0.0;
    for (std::size_t e = 0; e < k; ++e) total += raw.weight[base + e];
    if (!(total > 0.0)) {
      throw Error(ErrorKind::DegenerateRow, "row " + std::to_string(r) + " has zero total weight");
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return raw.index[base + a] < raw.index[base + b]; });
    for (std::size_t e = 0; e < k; ++e) {
      csr.col[base + e] = raw.index[base + order[e]];
      csr.val[base + e] = raw.weight[base + order[e]] / total;
    }
  }
  csr.row_ptr[csr.rows] = csr.rows * k;
  return TransitionMatrix(std::move(csr));
}

TransitionMatrix build_transition_matrix(const FeatureMap& features, const GraphConfig& cfg) {
  cfg.validate();
  return row_normalize(transition_weights(knn_search(features, cfg.k), cfg.beta));
}

}  // namespace rwcp
