#pragma once

#include <cstddef>

#include "rwcp/grid.hpp"

namespace rwcp {

// Half-pixel convention (align_corners = false): output pixel i samples the
// source at (i + 0.5) * in / out - 0.5, clamped to the valid range.
ProbMap resample_bilinear(const ProbMap& src, std::size_t out_h, std::size_t out_w);

// Nearest source pixel under the same pixel-center mapping.
BinaryMask resample_nearest(const BinaryMask& src, std::size_t out_h, std::size_t out_w);

}  // namespace rwcp
