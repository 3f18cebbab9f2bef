#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rwcp {

// Foreground probabilities on an H x W grid, row-major, each in [0, 1].
// Stored in double; persisted as float32.
class ProbMap {
 public:
  // Values within 1e-6 outside [0, 1] are clamped; anything further out throws RangeViolation.
  ProbMap(std::size_t height, std::size_t width, std::vector<double> values);

  static ProbMap constant(std::size_t height, std::size_t width, double value);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator()(std::size_t row, std::size_t col) const noexcept {
    return values_[row * width_ + col];
  }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const ProbMap&, const ProbMap&) = default;

  static constexpr double kRangeTolerance = 1e-6;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<double> values_;
};

// Patch-grid embeddings: H x W cells, each a dim-vector, row-major with the
// vector components contiguous.
class FeatureMap {
 public:
  FeatureMap(std::size_t height, std::size_t width, std::size_t dim, std::vector<float> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_pixels() const noexcept { return height_ * width_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<const float> vector(std::size_t pixel) const noexcept {
    return std::span<const float>(data_).subspan(pixel * dim_, dim_);
  }

  // Index of the first all-zero vector, or num_pixels() if none.
  std::size_t first_zero_vector() const noexcept;

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::size_t dim_;
  std::vector<float> data_;
};

class BinaryMask {
 public:
  BinaryMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> values);

  static BinaryMask filled(std::size_t height, std::size_t width, bool value);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const std::uint8_t> values() const noexcept { return values_; }
  bool operator()(std::size_t row, std::size_t col) const noexcept {
    return values_[row * width_ + col] != 0;
  }
  bool operator[](std::size_t i) const noexcept { return values_[i] != 0; }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  bool same_shape(const BinaryMask& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::uint8_t> values_;
};

// |a AND b|; throws DimensionMismatch on differing shapes.
std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

// Throws DimensionMismatch unless both grids are height x width.
void require_same_shape(std::size_t h1, std::size_t w1, std::size_t h2, std::size_t w2,
                        const char* what);

}  // namespace rwcp
