#include "rwcp/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rwcp/error.hpp"

namespace rwcp {

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;  // weight of hi
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t i = 0; i < out; ++i) {
    double x = (static_cast<double>(i) + 0.5) * scale - 0.5;
    x = std::clamp(x, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(x));
    const auto hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, x - static_cast<double>(lo)};
  }
  return taps;
}

std::size_t nearest_index(std::size_t i, std::size_t in, std::size_t out) {
  const double x = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out);
  return std::min(static_cast<std::size_t>(std::floor(x)), in - 1);
}

void require_positive(std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) {
    throw Error(ErrorKind::InvalidArgument, "resample target must be at least 1x1");
  }
}

}  // namespace

ProbMap resample_bilinear(const ProbMap& src, std::size_t out_h, std::size_t out_w) {
  require_positive(out_h, out_w);
  if (out_h == src.height() && out_w == src.width()) return src;

  const auto rows = bilinear_taps(src.height(), out_h);
  const auto cols = bilinear_taps(src.width(), out_w);
  std::vector<double> out(out_h * out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const Tap& ty = rows[r];
    for (std::size_t c = 0; c < out_w; ++c) {
      const Tap& tx = cols[c];
      const double top = src(ty.lo, tx.lo) * (1.0 - tx.frac) + src(ty.lo, tx.hi) * tx.frac;
      const double bot = src(ty.hi, tx.lo) * (1.0 - tx.frac) + src(ty.hi, tx.hi) * tx.frac;
      double v = top * (1.0 - ty.frac) + bot * ty.frac;
      // Convex combination; clamp away the last-ulp excursions.
      const double lo = std::min({src(ty.lo, tx.lo), src(ty.lo, tx.hi), src(ty.hi, tx.lo), src(ty.hi, tx.hi)});
      const double hi = std::max({src(ty.lo, tx.lo), src(ty.lo, tx.hi), src(ty.hi, tx.lo), src(ty.hi, tx.hi)});
      out[r * out_w + c] = std::clamp(v, lo, hi);
    }
  }
  return ProbMap(out_h, out_w, std::move(out));
}

BinaryMask resample_nearest(const BinaryMask& src, std::size_t out_h, std::size_t out_w) {
  require_positive(out_h, out_w);
  std::vector<std::uint8_t> out(out_h * out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const std::size_t sr = nearest_index(r, src.height(), out_h);
    for (std::size_t c = 0; c < out_w; ++c) {
      out[r * out_w + c] = src(sr, nearest_index(c, src.width(), out_w)) ? 1 : 0;
    }
  }
  return BinaryMask(out_h, out_w, std::move(out));
}

}  // namespace rwcp
