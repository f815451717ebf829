#include "camforge/detector.hpp"

#include <algorithm>
#include <stdexcept>

namespace camforge {

double intersection_area(const BBox& a, const BBox& b) noexcept {
  const double w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const BBox& a, const BBox& b) noexcept {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

DetectionSet::DetectionSet(std::vector<Detection> items) : items_(std::move(items)) {
  for (const auto& d : items_) {
    if (!d.box.valid()) throw std::invalid_argument("detection box is degenerate");
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw std::invalid_argument("detection confidence outside [0, 1]");
    }
  }
  std::stable_sort(items_.begin(), items_.end(), [](const Detection& a, const Detection& b) {
    return a.confidence > b.confidence;
  });
}

DetectorOutput CountingDetector::detect(const Image& image, bool want_activations) const {
  (want_activations ? with_activations_ : without_activations_).fetch_add(1);
  return inner_.detect(image, want_activations);
}

}  // namespace camforge
