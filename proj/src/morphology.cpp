#include "rwcp/morphology.hpp"

#include <algorithm>

#include "rwcp/error.hpp"

namespace rwcp {

BinaryMask dilate(const BinaryMask& mask, std::size_t times, Connectivity conn) {
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  std::vector<std::uint8_t> cur(mask.values().begin(), mask.values().end());
  std::vector<std::uint8_t> next(cur.size());
  for (std::size_t t = 0; t < times; ++t) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) {
        std::uint8_t v = 0;
        const std::size_t r0 = r == 0 ? 0 : r - 1;
        const std::size_t r1 = std::min(r + 1, h - 1);
        const std::size_t c0 = c == 0 ? 0 : c - 1;
        const std::size_t c1 = std::min(c + 1, w - 1);
        for (std::size_t rr = r0; rr <= r1 && !v; ++rr) {
          for (std::size_t cc = c0; cc <= c1 && !v; ++cc) {
            if (conn == Connectivity::Four && rr != r && cc != c) continue;
            v = cur[rr * w + cc];
          }
        }
        next[r * w + c] = v;
      }
    }
    if (next == cur) break;
    cur.swap(next);
  }
  return BinaryMask(h, w, std::move(cur));
}

std::vector<std::uint32_t> dilation_steps(const BinaryMask& mask, Connectivity conn) {
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  std::vector<std::uint32_t> d(h * w, kUnreachable);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (mask[i]) d[i] = 0;
  }
  auto relax = [&](std::size_t i, std::size_t j) {
    if (d[j] != kUnreachable && d[j] + 1 < d[i]) d[i] = d[j] + 1;
  };
  // Two-pass chamfer; exact for the unit chessboard and city-block metrics.
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t i = r * w + c;
      if (r > 0) relax(i, i - w);
      if (c > 0) relax(i, i - 1);
      if (conn == Connectivity::Eight && r > 0) {
        if (c > 0) relax(i, i - w - 1);
        if (c + 1 < w) relax(i, i - w + 1);
      }
    }
  }
  for (std::size_t r = h; r-- > 0;) {
    for (std::size_t c = w; c-- > 0;) {
      const std::size_t i = r * w + c;
      if (r + 1 < h) relax(i, i + w);
      if (c + 1 < w) relax(i, i + 1);
      if (conn == Connectivity::Eight && r + 1 < h) {
        if (c > 0) relax(i, i + w - 1);
        if (c + 1 < w) relax(i, i + w + 1);
      }
    }
  }
  return d;
}

BinaryMask extract_contour(const BinaryMask& mask, Connectivity conn) {
  const std::size_t h = mask.height();
  const std::size_t w = mask.width();
  if (mask.empty()) throw Error(ErrorKind::EmptyMask, "contour of an empty mask");
  std::vector<std::uint8_t> out(h * w, 0);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      if (r == 0 || c == 0 || r + 1 == h || c + 1 == w) {
        out[r * w + c] = 1;
        continue;
      }
      bool edge = !mask(r - 1, c) || !mask(r + 1, c) || !mask(r, c - 1) || !mask(r, c + 1);
      if (!edge && conn == Connectivity::Eight) {
        edge = !mask(r - 1, c - 1) || !mask(r - 1, c + 1) || !mask(r + 1, c - 1) ||
               !mask(r + 1, c + 1);
      }
      out[r * w + c] = edge ? 1 : 0;
    }
  }
  return BinaryMask(h, w, std::move(out));
}

}  // namespace rwcp
