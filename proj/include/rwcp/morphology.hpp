#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "rwcp/grid.hpp"

namespace rwcp {

// Four: 3x3 cross. Eight: full 3x3 square.
enum class Connectivity { Four = 4, Eight = 8 };

// One or more binary dilations with the 3x3 structuring element of `conn`.
BinaryMask dilate(const BinaryMask& mask, std::size_t times, Connectivity conn);

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

// For every pixel, the number of dilations of `mask` needed to include it:
// the chessboard (Eight) or city-block (Four) distance to the mask.
// kUnreachable everywhere for an empty mask.
std::vector<std::uint32_t> dilation_steps(const BinaryMask& mask, Connectivity conn);

// Foreground pixels with a background neighbor under `conn`, or on the image border.
BinaryMask extract_contour(const BinaryMask& mask, Connectivity conn = Connectivity::Four);

}  // namespace rwcp
