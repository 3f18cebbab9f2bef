// Shared fixtures and brute-force oracles for the test binaries.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <optional>

#include "rwcp/error.hpp"
#include "rwcp/grid.hpp"

namespace testing {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("rwcp_" + tag + "_" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Hand-rolled NPY writer so the reader is not tested against itself.
inline void write_raw_npy(const fs::path& path, const std::string& descr, const std::string& shape,
                          const std::string& payload, int major = 1) {
  std::string dict = "{'descr': '" + descr + "', 'fortran_order': False, 'shape': " + shape + ", }";
  const std::size_t prefix = major == 1 ? 10 : 12;
  std::size_t total = prefix + dict.size() + 1;
  total = (total + 63) / 64 * 64;
  dict.append(total - prefix - dict.size() - 1, ' ');
  dict.push_back('\n');
  std::string out = "\x93NUMPY";
  out.push_back(static_cast<char>(major));
  out.push_back(0);
  const std::uint32_t len = static_cast<std::uint32_t>(dict.size());
  out.push_back(static_cast<char>(len & 0xff));
  out.push_back(static_cast<char>((len >> 8) & 0xff));
  if (major != 1) {
    out.push_back(static_cast<char>((len >> 16) & 0xff));
    out.push_back(static_cast<char>((len >> 24) & 0xff));
  }
  std::ofstream f(path, std::ios::binary);
  f << out << dict << payload;
}

template <class T>
std::string as_bytes(const std::vector<T>& v) {
  return std::string(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
}

inline rwcp::ProbMap random_prob(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(h * w);
  for (auto& x : v) x = u(rng);
  return rwcp::ProbMap(h, w, std::move(v));
}

// Scores quantized to a few levels so ties and exact boundaries show up.
inline rwcp::ProbMap coarse_prob(std::mt19937_64& rng, std::size_t h, std::size_t w, int levels) {
  std::uniform_int_distribution<int> u(0, levels);
  std::vector<double> v(h * w);
  for (auto& x : v) x = static_cast<double>(u(rng)) / levels;
  return rwcp::ProbMap(h, w, std::move(v));
}

inline rwcp::BinaryMask random_mask(std::mt19937_64& rng, std::size_t h, std::size_t w,
                                    double density) {
  std::bernoulli_distribution b(density);
  std::vector<std::uint8_t> v(h * w);
  for (auto& x : v) x = b(rng);
  return rwcp::BinaryMask(h, w, std::move(v));
}

// Random features; with `palette` > 0 vectors are drawn from that many
// prototypes so exact distance ties occur.
inline rwcp::FeatureMap random_features(std::mt19937_64& rng, std::size_t h, std::size_t w,
                                        std::size_t dim, std::size_t palette = 0) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  auto draw = [&] {
    std::vector<float> v(dim);
    for (auto& x : v) x = n(rng);
    v[0] += 0.01f + std::abs(v[0]);
    return v;
  };
  std::vector<std::vector<float>> protos;
  for (std::size_t i = 0; i < palette; ++i) protos.push_back(draw());
  std::uniform_int_distribution<std::size_t> pick(0, palette == 0 ? 0 : palette - 1);
  std::vector<float> data;
  for (std::size_t p = 0; p < h * w; ++p) {
    const auto v = palette ? protos[pick(rng)] : draw();
    data.insert(data.end(), v.begin(), v.end());
  }
  return rwcp::FeatureMap(h, w, dim, std::move(data));
}

// All-pairs cosine kNN with the library's tie rule: self first, then
// ascending (distance, index).
struct BruteKnn {
  std::vector<std::vector<std::uint32_t>> index;
  std::vector<std::vector<double>> distance;
};

inline BruteKnn brute_knn(const rwcp::FeatureMap& f, std::size_t k) {
  const std::size_t m = f.num_pixels();
  std::vector<double> inv(m);
  for (std::size_t p = 0; p < m; ++p) {
    double sq = 0.0;
    for (float x : f.vector(p)) sq += static_cast<double>(x) * x;
    inv[p] = 1.0 / std::sqrt(sq);
  }
  BruteKnn out;
  const std::size_t kk = std::min(k, m);
  for (std::size_t p = 0; p < m; ++p) {
    std::vector<std::pair<double, std::uint32_t>> all;
    for (std::size_t q = 0; q < m; ++q) {
      if (q == p) continue;
      double dot = 0.0;
      const auto a = f.vector(p);
      const auto b = f.vector(q);
      for (std::size_t j = 0; j < f.dim(); ++j) dot += static_cast<double>(a[j]) * b[j];
      const double d = std::clamp(1.0 - dot * inv[p] * inv[q], 0.0, 2.0);
      all.emplace_back(d, static_cast<std::uint32_t>(q));
    }
    std::sort(all.begin(), all.end());
    std::vector<std::uint32_t> idx{static_cast<std::uint32_t>(p)};
    std::vector<double> dist{0.0};
    for (std::size_t i = 0; i + 1 < kk; ++i) {
      idx.push_back(all[i].second);
      dist.push_back(all[i].first);
    }
    out.index.push_back(idx);
    out.distance.push_back(dist);
  }
  return out;
}

// Contour pixels by definition, with a 4- or 8-neighborhood background test.
inline std::vector<std::pair<int, int>> brute_contour(const rwcp::BinaryMask& m, int conn) {
  std::vector<std::pair<int, int>> out;
  const int h = static_cast<int>(m.height());
  const int w = static_cast<int>(m.width());
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!m(r, c)) continue;
      bool edge = false;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if ((dr == 0 && dc == 0) || (conn == 4 && dr != 0 && dc != 0)) continue;
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= h || cc >= w || !m(rr, cc)) edge = true;
        }
      }
      if (edge) out.emplace_back(r, c);
    }
  }
  return out;
}

inline std::vector<double> brute_directed(const std::vector<std::pair<int, int>>& a,
                                          const std::vector<std::pair<int, int>>& b) {
  std::vector<double> out;
  for (auto [ar, ac] : a) {
    double best = std::numeric_limits<double>::infinity();
    for (auto [br, bc] : b) best = std::min(best, std::hypot(double(ar - br), double(ac - bc)));
    out.push_back(best);
  }
  return out;
}

inline double brute_percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double rank = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  return v[lo] + (rank - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Dense row-major matrix from CSR rows.
template <class Matrix>
std::vector<double> to_dense(const Matrix& p) {
  const std::size_t m = p.num_pixels();
  std::vector<double> d(m * m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const auto cols = p.row_columns(r);
    const auto vals = p.row_weights(r);
    for (std::size_t i = 0; i < cols.size(); ++i) d[r * m + cols[i]] = vals[i];
  }
  return d;
}

inline std::vector<double> dense_matvec(const std::vector<double>& a, const std::vector<double>& x) {
  const std::size_t m = x.size();
  std::vector<double> y(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) y[r] += a[r * m + c] * x[c];
  }
  return y;
}

// First point of the grid {0, step, 2 step, ...} (capped at 1) whose mean FNR is at
// most `target`, scanning upward and evaluating every point from the definition.
inline double grid_lambda(const std::vector<rwcp::ProbMap>& scores,
                          const std::vector<rwcp::BinaryMask>& masks, double target, double step) {
  std::vector<std::vector<double>> fg(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t p = 0; p < masks[i].size(); ++p) {
      if (masks[i][p]) fg[i].push_back(scores[i][p]);
    }
  }
  const auto points = static_cast<std::size_t>(std::llround(1.0 / step));
  for (std::size_t g = 0; g <= points; ++g) {
    const double lambda = g == points ? 1.0 : static_cast<double>(g) * step;
    std::vector<double> losses;
    for (const auto& f : fg) {
      std::size_t covered = 0;
      for (double v : f) covered += v >= 1.0 - lambda;
      losses.push_back(f.empty() ? 0.0 : 1.0 - static_cast<double>(covered) / static_cast<double>(f.size()));
    }
    std::sort(losses.begin(), losses.end());
    double sum = 0.0;
    for (double l : losses) sum += l;
    if (sum / static_cast<double>(losses.size()) <= target) return lambda;
  }
  return 1.0;
}

}  // namespace testing

// Evaluates `expr` and returns the ErrorKind it threw, or nullopt.
#define RWCP_ERROR_KIND(expr)                          \
  ([&]() -> std::optional<rwcp::ErrorKind> {           \
    try {                                              \
      (void)(expr);                                    \
    } catch (const rwcp::Error& e) {                   \
      return e.kind();                                 \
    }                                                  \
    return std::nullopt;                               \
  }())
