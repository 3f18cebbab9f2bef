#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version used by the
// library and a serial reference kept for tests and benchmarks. Both
// produce bit-identical output.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rwcp/grid.hpp"

namespace rwcp::kernels {

// Row-major (pixel, rank) neighbor table with min(k, M) entries per pixel.
struct KnnTable {
  std::size_t per_row = 0;
  std::vector<std::uint32_t> index;
  std::vector<double> distance;
};

// 1 / ||z_p|| in double for every pixel; throws ZeroVector on a zero norm.
std::vector<double> inverse_norms(const FeatureMap& features);

// Cosine distance 1 - <a,b> * inv_a * inv_b, clamped to [0, 2].
double cosine_distance(std::span<const float> a, std::span<const float> b, double inv_a,
                       double inv_b) noexcept;

// Exact k nearest neighbors under cosine distance. Each pixel's own index is
// entry 0 with distance 0; the rest ascend by (distance, index).
KnnTable knn_parallel(const FeatureMap& features, std::size_t k);
KnnTable knn_serial(const FeatureMap& features, std::size_t k);

// Compressed sparse rows.
struct CsrMatrix {
  std::size_t rows = 0;
  std::vector<std::size_t> row_ptr;  // rows + 1
  std::vector<std::uint32_t> col;
  std::vector<double> val;
};

// y = A x, each y_i clamped to the range of the x_j it averages. The clamp is
// a no-op in exact arithmetic for row-stochastic A.
void spmv_parallel(const CsrMatrix& a, std::span<const double> x, std::span<double> y);
void spmv_serial(const CsrMatrix& a, std::span<const double> x, std::span<double> y);

// Squared Euclidean distance from every pixel to the nearest set pixel of
// `sites` (row-major, nonzero = site). Pixels are unreachable (infinity)
// when there are no sites.
std::vector<double> edt_squared_parallel(std::span<const std::uint8_t> sites, std::size_t height,
                                         std::size_t width);
std::vector<double> edt_squared_serial(std::span<const std::uint8_t> sites, std::size_t height,
                                       std::size_t width);

}  // namespace rwcp::kernels
