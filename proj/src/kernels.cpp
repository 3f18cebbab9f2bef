#include "rwcp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "rwcp/error.hpp"

namespace rwcp::kernels {

std::vector<double> inverse_norms(const FeatureMap& features) {
  std::vector<double> inv(features.num_pixels());
  for (std::size_t p = 0; p < inv.size(); ++p) {
    double sq = 0.0;
    for (float x : features.vector(p)) sq += static_cast<double>(x) * static_cast<double>(x);
    if (sq == 0.0) {
      throw Error(ErrorKind::ZeroVector, "feature vector at pixel " + std::to_string(p));
    }
    inv[p] = 1.0 / std::sqrt(sq);
  }
  return inv;
}

double cosine_distance(std::span<const float> a, std::span<const float> b, double inv_a,
                       double inv_b) noexcept {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return std::clamp(1.0 - dot * inv_a * inv_b, 0.0, 2.0);
}

namespace {

struct Candidate {
  double distance;
  std::uint32_t index;
  bool operator<(const Candidate& o) const noexcept {
    return distance < o.distance || (distance == o.distance && index < o.index);
  }
};

void write_row(KnnTable& t, std::size_t p, std::span<const Candidate> sorted_others) {
  const std::size_t base = p * t.per_row;
  t.index[base] = static_cast<std::uint32_t>(p);
  t.distance[base] = 0.0;
  for (std::size_t r = 0; r < sorted_others.size(); ++r) {
    t.index[base + 1 + r] = sorted_others[r].index;
    t.distance[base + 1 + r] = sorted_others[r].distance;
  }
}

KnnTable make_table(const FeatureMap& features, std::size_t k) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
  KnnTable t;
  const std::size_t m = features.num_pixels();
  t.per_row = std::min(k, m);
  t.index.resize(m * t.per_row);
  t.distance.resize(m * t.per_row);
  return t;
}

constexpr std::size_t kBlock = 64;

}  // namespace

KnnTable knn_serial(const FeatureMap& features, std::size_t k) {
  KnnTable t = make_table(features, k);
  const auto inv = inverse_norms(features);
  const std::size_t m = features.num_pixels();
  const std::size_t keep = t.per_row - 1;
  std::vector<Candidate> row;
  row.reserve(m);
  for (std::size_t p = 0; p < m; ++p) {
    row.clear();
    for (std::size_t q = 0; q < m; ++q) {
      if (q == p) continue;
      row.push_back({cosine_distance(features.vector(p), features.vector(q), inv[p], inv[q]),
                     static_cast<std::uint32_t>(q)});
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(keep), row.end());
    write_row(t, p, std::span<const Candidate>(row.data(), keep));
  }
  return t;
}

// Tiles the pixel-pair space so a block of query rows reuses a block of
// candidate vectors from cache; each row keeps a bounded max-heap.
KnnTable knn_parallel(const FeatureMap& features, std::size_t k) {
  KnnTable t = make_table(features, k);
  const auto inv = inverse_norms(features);
  const std::size_t m = features.num_pixels();
  const std::size_t keep = t.per_row - 1;
  const auto num_blocks = static_cast<std::ptrdiff_t>((m + kBlock - 1) / kBlock);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < num_blocks; ++b) {
    const std::size_t row_begin = static_cast<std::size_t>(b) * kBlock;
    const std::size_t row_end = std::min(row_begin + kBlock, m);
    std::vector<std::priority_queue<Candidate>> heaps(row_end - row_begin);

    for (std::size_t col_begin = 0; col_begin < m; col_begin += kBlock) {
      const std::size_t col_end = std::min(col_begin + kBlock, m);
      for (std::size_t p = row_begin; p < row_end; ++p) {
        auto& heap = heaps[p - row_begin];
        if (keep == 0) continue;
        const auto zp = features.vector(p);
        for (std::size_t q = col_begin; q < col_end; ++q) {
          if (q == p) continue;
          Candidate c{cosine_distance(zp, features.vector(q), inv[p], inv[q]),
                      static_cast<std::uint32_t>(q)};
          if (heap.size() < keep) {
            heap.push(c);
          } else if (c < heap.top()) {
            heap.pop();
            heap.push(c);
          }
        }
      }
    }

    std::vector<Candidate> sorted;
    for (std::size_t p = row_begin; p < row_end; ++p) {
      auto& heap = heaps[p - row_begin];
      sorted.assign(heap.size(), {});
      for (std::size_t i = heap.size(); i-- > 0;) {
        sorted[i] = heap.top();
        heap.pop();
      }
      write_row(t, p, sorted);
    }
  }
  return t;
}

namespace {

inline double spmv_row(const CsrMatrix& a, std::span<const double> x, std::size_t i) noexcept {
  double acc = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t e = a.row_ptr[i]; e < a.row_ptr[i + 1]; ++e) {
    const double xj = x[a.col[e]];
    acc += a.val[e] * xj;
    lo = std::min(lo, xj);
    hi = std::max(hi, xj);
  }
  return a.row_ptr[i] == a.row_ptr[i + 1] ? 0.0 : std::clamp(acc, lo, hi);
}

}  // namespace

void spmv_serial(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < a.rows; ++i) y[i] = spmv_row(a, x, i);
}

void spmv_parallel(const CsrMatrix& a, std::span<const double> x, std::span<double> y) {
  const auto rows = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    y[static_cast<std::size_t>(i)] = spmv_row(a, x, static_cast<std::size_t>(i));
  }
}

namespace {

constexpr double kFar = 1e20;

// Lower envelope of parabolas, one line. `f` is read from `in` with the given
// stride and written to `out` with the same stride.
void edt_line(const double* in, double* out, std::size_t n, std::size_t stride,
              std::vector<std::size_t>& v, std::vector<double>& z) {
  v.resize(n);
  z.resize(n + 1);
  std::size_t k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  auto f = [&](std::size_t q) { return in[q * stride]; };
  for (std::size_t q = 1; q < n; ++q) {
    const double fq = f(q) + static_cast<double>(q * q);
    auto intersect = [&](std::size_t vk) {
      return (fq - (f(vk) + static_cast<double>(vk * vk))) /
             (2.0 * static_cast<double>(q) - 2.0 * static_cast<double>(vk));
    };
    double s = intersect(v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double d = static_cast<double>(q) - static_cast<double>(v[k]);
    out[q * stride] = d * d + f(v[k]);
  }
}

template <bool Parallel>
std::vector<double> edt_squared(std::span<const std::uint8_t> sites, std::size_t height,
                                std::size_t width) {
  std::vector<double> grid(height * width);
  bool any = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    grid[i] = sites[i] ? 0.0 : kFar;
    any = any || sites[i];
  }
  if (!any) return std::vector<double>(height * width, std::numeric_limits<double>::infinity());

  std::vector<double> tmp(height * width);
  const auto w = static_cast<std::ptrdiff_t>(width);
  const auto h = static_cast<std::ptrdiff_t>(height);

#pragma omp parallel if (Parallel)
  {
    std::vector<std::size_t> v;
    std::vector<double> z;
#pragma omp for schedule(static)
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const auto col = static_cast<std::size_t>(c);
      edt_line(grid.data() + col, tmp.data() + col, height, width, v, z);
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < h; ++r) {
      const auto row = static_cast<std::size_t>(r) * width;
      edt_line(tmp.data() + row, grid.data() + row, width, 1, v, z);
    }
  }
  return grid;
}

}  // namespace

std::vector<double> edt_squared_parallel(std::span<const std::uint8_t> sites, std::size_t height,
                                         std::size_t width) {
  return edt_squared<true>(sites, height, width);
}

std::vector<double> edt_squared_serial(std::span<const std::uint8_t> sites, std::size_t height,
                                       std::size_t width) {
  return edt_squared<false>(sites, height, width);
}

}  // namespace rwcp::kernels
