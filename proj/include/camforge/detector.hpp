#pragma once

#include <atomic>
#include <cstddef>
#include <string>
#include <vector>

#include "camforge/grid.hpp"

namespace camforge {

/// Axis-aligned box in continuous image coordinates, origin top-left.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }
  double area() const noexcept { return width() * height(); }
  double center_x() const noexcept { return 0.5 * (x_min + x_max); }
  double center_y() const noexcept { return 0.5 * (y_min + y_max); }

  bool valid() const noexcept { return x_min < x_max && y_min < y_max; }
  bool intersects_extent(std::size_t w, std::size_t h) const noexcept {
    return x_max > 0.0 && y_max > 0.0 && x_min < static_cast<double>(w) &&
           y_min < static_cast<double>(h);
  }
  bool contains(double x, double y) const noexcept {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }

  bool operator==(const BBox&) const = default;
};

double intersection_area(const BBox& a, const BBox& b) noexcept;
double iou(const BBox& a, const BBox& b) noexcept;

struct Detection {
  BBox box;
  double confidence = 0.0;

  bool operator==(const Detection&) const = default;
};

/// Detections ordered by descending confidence. Equal confidences keep their
/// insertion order.
class DetectionSet {
 public:
  DetectionSet() = default;
  explicit DetectionSet(std::vector<Detection> items);

  const std::vector<Detection>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const Detection& operator[](std::size_t i) const { return items_.at(i); }
  auto begin() const noexcept { return items_.begin(); }
  auto end() const noexcept { return items_.end(); }

  bool operator==(const DetectionSet&) const = default;

 private:
  std::vector<Detection> items_;
};

struct DetectorOutput {
  DetectionSet detections;
  /// One stack per backbone layer at layer-native resolution; empty unless
  /// activations were requested.
  std::vector<GridStack> layer_activations;
};

/// Any source of detections and backbone activations.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual DetectorOutput detect(const Image& image, bool want_activations) const = 0;

  /// Upper bound on concurrent detect() calls the backend tolerates.
  virtual std::size_t max_concurrency() const noexcept { return 1; }

  virtual std::string name() const = 0;
};

/// Forwards to another detector and counts calls.
class CountingDetector final : public Detector {
 public:
  explicit CountingDetector(const Detector& inner) : inner_(inner) {}

  DetectorOutput detect(const Image& image, bool want_activations) const override;
  std::size_t max_concurrency() const noexcept override { return inner_.max_concurrency(); }
  std::string name() const override { return inner_.name(); }

  std::size_t calls() const noexcept { return with_activations_ + without_activations_; }
  std::size_t calls_with_activations() const noexcept { return with_activations_; }
  std::size_t calls_without_activations() const noexcept { return without_activations_; }

 private:
  const Detector& inner_;
  mutable std::atomic<std::size_t> with_activations_{0};
  mutable std::atomic<std::size_t> without_activations_{0};
};

}  // namespace camforge
