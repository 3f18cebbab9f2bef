#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rwcp/graph.hpp"
#include "rwcp/kernels.hpp"
#include "rwcp/morphology.hpp"
#include "support.hpp"

using namespace rwcp;

TEST_CASE("knn matches the all-pairs scan") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const std::size_t h = 1 + rng() % 9;
    const std::size_t w = 1 + rng() % 9;
    const std::size_t k = 1 + rng() % 12;
    const std::size_t palette = t % 3 == 0 ? 3 : 0;
    auto f = testing::random_features(rng, h, w, 1 + rng() % 6, palette);
    const auto oracle = testing::brute_knn(f, k);
    const auto nl = knn_search(f, k);
    REQUIRE(nl.per_row() == std::min(k, h * w));
    for (std::size_t p = 0; p < f.num_pixels(); ++p) {
      const auto idx = nl.neighbors(p);
      const auto dist = nl.distances(p);
      CHECK(std::vector<std::uint32_t>(idx.begin(), idx.end()) == oracle.index[p]);
      for (std::size_t i = 0; i < dist.size(); ++i) CHECK(dist[i] == oracle.distance[p][i]);
    }
  }
}

TEST_CASE("parallel knn and serial knn are bit-identical") {
  std::mt19937_64 rng(12);
  for (std::size_t palette : {0, 2, 5}) {
    auto f = testing::random_features(rng, 23, 19, 7, palette);
    const auto a = kernels::knn_parallel(f, 20);
    const auto b = kernels::knn_serial(f, 20);
    CHECK(a.per_row == b.per_row);
    CHECK(a.index == b.index);
    CHECK(a.distance == b.distance);
  }
}

TEST_CASE("knn small cases") {
  FeatureMap orth(1, 2, 2, {1, 0, 0, 1});
  auto nl = knn_search(orth, 2);
  CHECK(nl.neighbors(0)[0] == 0);
  CHECK(nl.neighbors(0)[1] == 1);
  CHECK(nl.distances(0)[1] == 1.0);
  CHECK(nl.distances(1)[1] == 1.0);

  // Identical vectors: self still comes first.
  FeatureMap same(1, 3, 2, {1, 1, 1, 1, 1, 1});
  auto s = knn_search(same, 3);
  CHECK(s.neighbors(2)[0] == 2);
  CHECK(s.neighbors(2)[1] == 0);
  CHECK(s.neighbors(2)[2] == 1);

  CHECK(RWCP_ERROR_KIND(knn_search(orth, 0)) == ErrorKind::InvalidArgument);
  FeatureMap zero(1, 2, 2, {1, 0, 0, 0});
  CHECK(RWCP_ERROR_KIND(knn_search(zero, 2)) == ErrorKind::ZeroVector);
}

TEST_CASE("kernel weights") {
  NeighborList nl(kernels::KnnTable{2, {0, 1, 1, 0}, {0.0, 0.02, 0.0, 0.5}});
  auto raw = transition_weights(nl, 50.0);
  CHECK(raw.weight[0] == 1.0);
  CHECK(raw.weight[1] == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(raw.weight[3] == std::exp(-25.0));

  std::mt19937_64 rng(13);
  auto g = testing::random_features(rng, 6, 6, 5);
  auto neighbors = knn_search(g, 6);
  auto soft = row_normalize(transition_weights(neighbors, 0.1));
  auto hard = row_normalize(transition_weights(neighbors, 100.0));
  // The nearest neighbor is the pixel itself.
  for (std::size_t p = 0; p < g.num_pixels(); ++p) {
    auto self_weight = [&](const TransitionMatrix& m) {
      const auto cols = m.row_columns(p);
      return m.row_weights(p)[std::find(cols.begin(), cols.end(), p) - cols.begin()];
    };
    if (neighbors.distances(p)[1] > 0.0) CHECK(self_weight(hard) > self_weight(soft));
  }
}

TEST_CASE("row normalization") {
  RawAdjacency equal{3, {0, 1, 2}, {2.0, 2.0, 2.0}};
  auto m = row_normalize(equal);
  for (double v : m.row_weights(0)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  RawAdjacency pair{2, {0, 1, 1, 0}, {1.0, 3.0, 3.0, 1.0}};
  auto q = row_normalize(pair);
  CHECK(q.row_weights(0)[0] == 0.25);
  CHECK(q.row_weights(0)[1] == 0.75);
  // Columns come out sorted even when ranks are not.
  CHECK(q.row_columns(1)[0] == 0);
  CHECK(q.row_weights(1)[0] == 0.25);

  RawAdjacency dead{2, {0, 1, 1, 0}, {1.0, 1.0, 0.0, 0.0}};
  CHECK(RWCP_ERROR_KIND(row_normalize(dead)) == ErrorKind::DegenerateRow);

  std::mt19937_64 rng(14);
  std::size_t rows = 0;
  while (rows < 1000) {
    auto f = testing::random_features(rng, 8, 8, 4, rows % 3 == 0 ? 4 : 0);
    GraphConfig cfg{1 + rng() % 30, std::uniform_real_distribution<double>(0.1, 200.0)(rng)};
    auto p = build_transition_matrix(f, cfg);
    for (std::size_t r = 0; r < p.num_pixels(); ++r, ++rows) {
      double sum = 0.0;
      for (double v : p.row_weights(r)) {
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-9);
      const auto cols = p.row_columns(r);
      CHECK(std::adjacent_find(cols.begin(), cols.end(), std::greater_equal<>()) == cols.end());
    }
  }
}

TEST_CASE("graph config validation") {
  CHECK(RWCP_ERROR_KIND((GraphConfig{0, 50.0}.validate())) == ErrorKind::InvalidArgument);
  CHECK(RWCP_ERROR_KIND((GraphConfig{5, -1.0}.validate())) == ErrorKind::InvalidArgument);
  CHECK(!RWCP_ERROR_KIND((GraphConfig{}.validate())));
}

TEST_CASE("transition matrix csv dump") {
  testing::TempDir dir("graphcsv");
  auto p = row_normalize(RawAdjacency{2, {0, 1, 1, 0}, {1.0, 3.0, 1.0, 1.0}});
  p.dump_csv(dir / "g.csv");
  const auto text = testing::read_file(dir / "g.csv");
  CHECK(text.rfind("row,col,weight\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  CHECK(text.find("0,1,0.75") != std::string::npos);
}

TEST_CASE("spmv parallel and serial agree and clamp to row range") {
  std::mt19937_64 rng(15);
  auto f = testing::random_features(rng, 30, 30, 6);
  auto p = build_transition_matrix(f, GraphConfig{});
  auto x = testing::random_prob(rng, 30, 30);
  std::vector<double> a(900), b(900);
  kernels::spmv_parallel(p.csr(), x.values(), a);
  kernels::spmv_serial(p.csr(), x.values(), b);
  CHECK(a == b);
  for (std::size_t r = 0; r < 900; ++r) {
    double lo = 1.0, hi = 0.0;
    for (auto c : p.row_columns(r)) {
      lo = std::min(lo, x[c]);
      hi = std::max(hi, x[c]);
    }
    CHECK(a[r] >= lo);
    CHECK(a[r] <= hi);
  }
}

TEST_CASE("distance transform against brute force") {
  std::mt19937_64 rng(16);
  for (int t = 0; t < 40; ++t) {
    const std::size_t h = 1 + rng() % 20;
    const std::size_t w = 1 + rng() % 20;
    auto m = testing::random_mask(rng, h, w, t % 4 == 0 ? 0.02 : 0.2);
    auto par = kernels::edt_squared_parallel(m.values(), h, w);
    auto ser = kernels::edt_squared_serial(m.values(), h, w);
    CHECK(par == ser);
    for (std::size_t i = 0; i < h * w; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < h * w; ++j) {
        if (!m[j]) continue;
        const double dr = double(i / w) - double(j / w);
        const double dc = double(i % w) - double(j % w);
        best = std::min(best, dr * dr + dc * dc);
      }
      CHECK(par[i] == best);
    }
  }
}

TEST_CASE("dilation steps match literal dilation") {
  std::mt19937_64 rng(17);
  for (auto conn : {Connectivity::Four, Connectivity::Eight}) {
    for (int t = 0; t < 10; ++t) {
      auto m = testing::random_mask(rng, 12, 9, 0.03);
      const auto steps = dilation_steps(m, conn);
      for (std::size_t times = 0; times < 8; ++times) {
        const auto d = dilate(m, times, conn);
        for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == (steps[i] <= times));
      }
    }
  }
  CHECK(dilation_steps(BinaryMask::filled(3, 3, false), Connectivity::Eight)[4] == kUnreachable);
}
