#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace camforge {

/// Dense row-major raster. Width and height are at least 1 and every value is
/// finite when constructed from data.
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid(std::size_t width, std::size_t height, T fill = T{0})
      : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(width * height, fill);
  }

  Grid(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != width * height) {
      throw std::invalid_argument("grid data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(width) + "x" +
                                  std::to_string(height));
    }
    for (const T v : data_) {
      if (!std::isfinite(v)) throw std::invalid_argument("grid contains a non-finite value");
    }
  }

  /// Converting copy between storage precisions.
  template <typename U>
  static Grid from(const Grid<U>& other) {
    std::vector<T> out(other.values().begin(), other.values().end());
    return Grid(other.width(), other.height(), std::move(out));
  }

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  T operator()(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }
  T& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }

  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  bool operator==(const Grid&) const = default;

 private:
  static void check_dims(std::size_t w, std::size_t h) {
    if (w == 0 || h == 0) throw std::invalid_argument("grid dimensions must be at least 1x1");
  }

  std::size_t width_;
  std::size_t height_;
  std::vector<T> data_;
};

/// Ordered channels sharing one raster shape. An empty stack is valid and has
/// no shape.
template <typename T>
class Stack {
 public:
  Stack() = default;

  explicit Stack(std::vector<Grid<T>> channels) : channels_(std::move(channels)) {
    for (const auto& g : channels_) {
      if (!g.same_shape(channels_.front())) {
        throw std::invalid_argument("stack channels must share identical dimensions");
      }
    }
  }

  void push_back(Grid<T> g) {
    if (!channels_.empty() && !g.same_shape(channels_.front())) {
      throw std::invalid_argument("stack channels must share identical dimensions");
    }
    channels_.push_back(std::move(g));
  }

  std::size_t channels() const noexcept { return channels_.size(); }
  bool empty() const noexcept { return channels_.empty(); }
  std::size_t width() const noexcept { return empty() ? 0 : channels_.front().width(); }
  std::size_t height() const noexcept { return empty() ? 0 : channels_.front().height(); }

  const Grid<T>& operator[](std::size_t c) const { return channels_.at(c); }
  Grid<T>& operator[](std::size_t c) { return channels_.at(c); }

  auto begin() const noexcept { return channels_.begin(); }
  auto end() const noexcept { return channels_.end(); }

  bool operator==(const Stack&) const = default;

 private:
  std::vector<Grid<T>> channels_;
};

using Grid2D = Grid<float>;
using GridStack = Stack<float>;

/// Three-channel RGB raster with values nominally in [0, 1].
class Image {
 public:
  Image(Grid2D r, Grid2D g, Grid2D b) : channels_{std::move(r), std::move(g), std::move(b)} {
    if (!channels_[0].same_shape(channels_[1]) || !channels_[0].same_shape(channels_[2])) {
      throw std::invalid_argument("image channels must share identical dimensions");
    }
  }

  static Image filled(std::size_t width, std::size_t height, float r, float g, float b) {
    return Image(Grid2D(width, height, r), Grid2D(width, height, g), Grid2D(width, height, b));
  }

  std::size_t width() const noexcept { return channels_[0].width(); }
  std::size_t height() const noexcept { return channels_[0].height(); }

  const Grid2D& channel(std::size_t c) const { return channels_.at(c); }
  Grid2D& channel(std::size_t c) { return channels_.at(c); }

  bool operator==(const Image&) const = default;

 private:
  std::array<Grid2D, 3> channels_;
};

/// Discrete distribution: nonnegative entries summing to one within 1e-9.
class ProbVector {
 public:
  explicit ProbVector(std::vector<double> values);

  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::vector<double> values_;
};

template <typename T>
Grid<T> bilinear_upsample(const Grid<T>& src, std::size_t target_w, std::size_t target_h);

/// (g - min) / (max - min); a constant grid maps to all zeros.
Grid2D minmax_normalize(const Grid2D& g);

/// Multiplies every image channel elementwise by `mask`.
Image hadamard_mask(const Image& image, const Grid2D& mask);

/// Per-pixel softmax across channels, evaluated and stored in double precision.
template <typename T>
Stack<double> pixelwise_channel_softmax(const Stack<T>& stack);

/// Softmax of a score vector, max-shifted.
std::vector<double> softmax(std::span<const double> scores);

/// Min-shift, add epsilon, normalize.
template <typename T>
ProbVector to_distribution(const Grid<T>& g, double epsilon);

double kl_divergence(const ProbVector& p, const ProbVector& q);

}  // namespace camforge
