#include "rwcp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rwcp/error.hpp"

namespace rwcp {

namespace {

void require_nonempty(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) {
    throw Error(ErrorKind::ShapeMismatch, "grid dimensions must be at least 1x1");
  }
}

}  // namespace

ProbMap::ProbMap(std::size_t height, std::size_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  require_nonempty(height_, width_);
  if (values_.size() != height_ * width_) {
    throw Error(ErrorKind::ShapeMismatch, "probability map has " + std::to_string(values_.size()) +
                                              " values for a " + std::to_string(height_) + "x" +
                                              std::to_string(width_) + " grid");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    double& v = values_[i];
    if (!(v >= -kRangeTolerance && v <= 1.0 + kRangeTolerance)) {
      throw Error(ErrorKind::RangeViolation,
                  "probability " + std::to_string(v) + " at index " + std::to_string(i));
    }
    v = std::clamp(v, 0.0, 1.0);
  }
}

ProbMap ProbMap::constant(std::size_t height, std::size_t width, double value) {
  return ProbMap(height, width, std::vector<double>(height * width, value));
}

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t dim,
                       std::vector<float> data)
    : height_(height), width_(width), dim_(dim), data_(std::move(data)) {
  require_nonempty(height_, width_);
  if (dim_ == 0) throw Error(ErrorKind::ShapeMismatch, "feature dimension must be at least 1");
  if (data_.size() != height_ * width_ * dim_) {
    throw Error(ErrorKind::ShapeMismatch, "feature map payload does not match its shape");
  }
}

std::size_t FeatureMap::first_zero_vector() const noexcept {
  for (std::size_t p = 0; p < num_pixels(); ++p) {
    auto v = vector(p);
    if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) return p;
  }
  return num_pixels();
}

BinaryMask::BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> values)
    : height_(height), width_(width), values_(std::move(values)) {
  require_nonempty(height_, width_);
  if (values_.size() != height_ * width_) {
    throw Error(ErrorKind::ShapeMismatch, "mask payload does not match its shape");
  }
  for (auto v : values_) {
    if (v > 1) throw Error(ErrorKind::RangeViolation, "mask value " + std::to_string(v));
  }
}

BinaryMask BinaryMask::filled(std::size_t height, std::size_t width, bool value) {
  return BinaryMask(height, width, std::vector<std::uint8_t>(height * width, value ? 1 : 0));
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

void require_same_shape(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2,
                        const char* what) {
  if (h1 != h2 || w1 != w2) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(what) + ": " + std::to_string(h1) + "x" + std::to_string(w1) +
                    " vs " + std::to_string(h2) + "x" + std::to_string(w2));
  }
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a.height(), a.width(), b.height(), b.width(), "mask intersection");
  auto av = a.values();
  auto bv = b.values();
  std::size_t n = 0;
  for (std::size_t i = 0; i < av.size(); ++i) n += (av[i] & bv[i]);
  return n;
}

}  // namespace rwcp
