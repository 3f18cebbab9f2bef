#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rwcp/conformal.hpp"
#include "rwcp/metrics.hpp"
#include "rwcp/morphology.hpp"
#include "support.hpp"

using namespace rwcp;

namespace {

BinaryMask pixels(std::size_t h, std::size_t w, std::initializer_list<std::pair<int, int>> on) {
  std::vector<std::uint8_t> v(h * w, 0);
  for (auto [r, c] : on) v[r * w + c] = 1;
  return BinaryMask(h, w, std::move(v));
}

BinaryMask blob(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  // Mix of sparse noise and a filled rectangle so contours have interiors.
  auto m = testing::random_mask(rng, h, w, 0.05);
  std::vector<std::uint8_t> v(m.values().begin(), m.values().end());
  const std::size_t r0 = rng() % h, c0 = rng() % w;
  const std::size_t r1 = std::min(h, r0 + 1 + rng() % 10), c1 = std::min(w, c0 + 1 + rng() % 10);
  for (std::size_t r = r0; r < r1; ++r)
    for (std::size_t c = c0; c < c1; ++c) v[r * w + c] = 1;
  return BinaryMask(h, w, std::move(v));
}

}  // namespace

TEST_CASE("coverage, stretch, dsc") {
  auto y = pixels(2, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}});
  CHECK(coverage(y, y) == 1.0);
  CHECK(coverage(pixels(2, 4, {{0, 3}}), y) == 0.0);
  CHECK(RWCP_ERROR_KIND(coverage(y, BinaryMask::filled(2, 4, false))) == ErrorKind::EmptyGroundTruth);

  CHECK(stretch(y, y) == 1.0);
  CHECK(stretch(BinaryMask::filled(2, 4, true), y) == 2.0);
  CHECK(stretch(BinaryMask::filled(2, 4, false), y) == 0.0);
  CHECK(RWCP_ERROR_KIND(stretch(y, BinaryMask::filled(2, 4, false))) == ErrorKind::EmptyBasePrediction);

  CHECK(dsc(y, y) == 1.0);
  CHECK(dsc(y, pixels(2, 4, {{0, 3}})) == 0.0);
  CHECK(dsc(BinaryMask::filled(2, 4, false), BinaryMask::filled(2, 4, false)) == 1.0);
  std::vector<std::uint8_t> a(16, 0), b(16, 0);
  for (int i = 0; i < 8; ++i) a[i] = 1;
  for (int i = 4; i < 12; ++i) b[i] = 1;
  CHECK(dsc(BinaryMask(4, 4, a), BinaryMask(4, 4, b)) == 0.5);
}

TEST_CASE("coverage and fnr are complementary") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 500; ++t) {
    auto c = testing::random_mask(rng, 9, 7, 0.5);
    auto y = testing::random_mask(rng, 9, 7, 0.3);
    if (y.empty()) continue;
    CHECK(std::abs(coverage(c, y) + fnr_loss(y, c) - 1.0) <= 1e-15);
  }
}

TEST_CASE("contours") {
  CHECK(extract_contour(pixels(5, 5, {{2, 2}})) == pixels(5, 5, {{2, 2}}));
  std::vector<std::uint8_t> block(49, 0);
  for (int r = 2; r <= 4; ++r)
    for (int c = 2; c <= 4; ++c) block[r * 7 + c] = 1;
  auto edge = extract_contour(BinaryMask(7, 7, block));
  CHECK(edge.count() == 8);
  CHECK(!edge(3, 3));

  auto full = extract_contour(BinaryMask::filled(4, 5, true));
  CHECK(full.count() == 14);
  CHECK(!full(1, 1));
  CHECK(full(0, 2));

  CHECK(RWCP_ERROR_KIND(extract_contour(BinaryMask::filled(3, 3, false))) == ErrorKind::EmptyMask);

  std::mt19937_64 rng(42);
  for (int t = 0; t < 50; ++t) {
    auto m = blob(rng, 1 + rng() % 20, 1 + rng() % 20);
    for (int conn : {4, 8}) {
      auto got = extract_contour(m, conn == 4 ? Connectivity::Four : Connectivity::Eight);
      auto want = testing::brute_contour(m, conn);
      CHECK(got.count() == want.size());
      for (auto [r, c] : want) CHECK(got(r, c));
    }
  }
}

TEST_CASE("surface distance hand cases") {
  auto a = pixels(5, 9, {{2, 1}});
  auto b = pixels(5, 9, {{2, 4}});
  CHECK(assd(a, b) == 3.0);
  CHECK(hd95(a, b) == 3.0);
  auto c = pixels(9, 9, {{1, 1}});
  auto d = pixels(9, 9, {{4, 5}});
  CHECK(hd95(c, d) == 5.0);
  CHECK(hd100(c, d) == 5.0);
  MetricOptions mm;
  mm.spacing = 0.5;
  CHECK(hd95(c, d, mm) == 2.5);
  CHECK(assd(a, a) == 0.0);
  CHECK(hd95(a, a) == 0.0);
  CHECK(RWCP_ERROR_KIND(assd(a, BinaryMask::filled(5, 9, false))) == ErrorKind::EmptyMask);
}

TEST_CASE("surface distances agree with the all-pairs oracle") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 200; ++t) {
    const std::size_t h = 1 + rng() % 32, w = 1 + rng() % 32;
    auto a = blob(rng, h, w);
    auto b = blob(rng, h, w);
    const auto ca = testing::brute_contour(a, 4);
    const auto cb = testing::brute_contour(b, 4);
    auto ab = testing::brute_directed(ca, cb);
    auto ba = testing::brute_directed(cb, ca);
    std::vector<double> all = ab;
    all.insert(all.end(), ba.begin(), ba.end());
    double sum = 0.0;
    for (double v : all) sum += v;

    const auto d = surface_distances(a, b);
    REQUIRE(d.a_to_b.size() == ab.size());
    for (std::size_t i = 0; i < ab.size(); ++i) CHECK(std::abs(d.a_to_b[i] - ab[i]) <= 1e-9);
    CHECK(std::abs(assd(a, b) - sum / all.size()) <= 1e-9);
    CHECK(std::abs(hd95(a, b) - testing::brute_percentile(all, 0.95)) <= 1e-9);
    CHECK(assd(a, b) == assd(b, a));
    CHECK(hd95(a, b) == hd95(b, a));
    CHECK(hd100(a, b) == *std::max_element(all.begin(), all.end()));
  }
}

TEST_CASE("percentile") {
  CHECK(percentile({5.0}, 0.95) == 5.0);
  CHECK(percentile({0.0, 10.0}, 0.95) == doctest::Approx(9.5));
  CHECK(percentile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(percentile({3.0, 1.0, 2.0}, 1.0) == 3.0);
  CHECK(RWCP_ERROR_KIND(percentile({}, 0.5)) == ErrorKind::InvalidArgument);
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u(0, 10);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v(1 + rng() % 50);
    for (auto& x : v) x = u(rng);
    const double q = u(rng) / 10;
    CHECK(percentile(v, q) == testing::brute_percentile(v, q));
  }
}

TEST_CASE("evaluate flags degenerate cases") {
  auto y = pixels(6, 6, {{2, 2}, {2, 3}});
  auto y_hat = pixels(6, 6, {{2, 2}});
  auto none = BinaryMask::filled(6, 6, false);

  auto ok = evaluate(y, y, y_hat);
  CHECK(ok.flags == 0);
  CHECK(ok.coverage == 1.0);
  CHECK(ok.stretch == 2.0);
  CHECK(ok.dsc == 1.0);
  CHECK(ok.assd == 0.0);
  CHECK(ok.hd95 == 0.0);

  auto empty_set = evaluate(none, y, y_hat);
  CHECK(empty_set.flags == kEmptySet);
  CHECK(empty_set.coverage == 0.0);
  CHECK(std::isnan(empty_set.assd));
  CHECK(std::isnan(empty_set.hd95));

  auto no_truth = evaluate(y, none, none);
  CHECK(no_truth.flags == (kEmptyGroundTruth | kEmptyBasePrediction));
  CHECK(std::isnan(no_truth.coverage));
  CHECK(std::isnan(no_truth.stretch));
  CHECK(flags_to_string(no_truth.flags) == "empty_ground_truth|empty_base_prediction");
  CHECK(flags_to_string(0).empty());
}

TEST_CASE("summary skips NaN and uses the sample deviation") {
  const double nan = std::nan("");
  std::vector<MetricReport> rs{{1.0, 2.0, 0.5, 1.0, 2.0, 0},
                               {0.5, 4.0, 0.7, nan, nan, kEmptySet},
                               {0.0, 3.0, 0.9, 3.0, 4.0, 0}};
  auto s = summarize(rs);
  CHECK(s.images == 3);
  CHECK(s.degenerate == 1);
  CHECK(s.coverage.mean == 0.5);
  CHECK(s.coverage.stddev == 0.5);
  CHECK(s.stretch.mean == 3.0);
  CHECK(s.assd.count == 2);
  CHECK(s.assd.mean == 2.0);
  CHECK(s.assd.stddev == doctest::Approx(std::sqrt(2.0)));
  CHECK(summarize(std::vector<MetricReport>(1, rs[0])).dsc.stddev == 0.0);
}
