#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camforge/detector.hpp"
#include "camforge/pipeline.hpp"

namespace camforge {

class BinaryMask {
 public:
  BinaryMask(std::size_t width, std::size_t height, bool fill = false)
      : width_(width), height_(height), bits_(width * height, fill ? 1 : 0) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(std::size_t x, std::size_t y) const noexcept { return bits_[y * width_ + x] != 0; }
  bool at(std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(std::size_t x, std::size_t y, bool on) noexcept { bits_[y * width_ + x] = on ? 1 : 0; }
  void set(std::size_t i, bool on) noexcept { bits_[i] = on ? 1 : 0; }

  std::size_t count() const noexcept;
  bool same_shape(const BinaryMask& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

  bool operator==(const BinaryMask&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<std::uint8_t> bits_;
};

/// Bit set where normalized >= threshold.
BinaryMask cam_mask(const Grid2D& normalized, double threshold);
BinaryMask cam_mask(const Cam& cam, double threshold);

/// Foreground: pixel centre inside any box. Background: the complement.
std::pair<BinaryMask, BinaryMask> fg_bg_masks(std::span<const BBox> boxes, std::size_t width,
                                              std::size_t height);

enum class IouDenominator {
  union_area,  ///< |A| + |B| - |A n B|
  sum,         ///< |A| + |B|, the literal product-over-sum form
};

/// |A n B| / denominator; 0 when the denominator is 0.
double cam_iou(const BinaryMask& a, const BinaryMask& b, IouDenominator denom = IouDenominator::union_area);

struct EvalCase {
  std::string name;
  Grid2D cam_normalized;
  std::vector<BBox> ground_truth;
};

struct SceneScore {
  std::string name;
  double camiou_fg = 0.0;
  double camiou_bg = 0.0;
  bool cam_empty = false;
  bool gt_empty = false;
};

struct EvalReport {
  std::vector<SceneScore> scenes;
  /// Per-image means, scaled by 100.
  double camiou_fg_pct = 0.0;
  double camiou_bg_pct = 0.0;
  std::size_t empty_cam_count = 0;
  std::size_t empty_gt_count = 0;
  double threshold = 0.4;
  IouDenominator denominator = IouDenominator::union_area;
};

inline constexpr double kDefaultThreshold = 0.4;

SceneScore score_scene(const EvalCase& c, double threshold, IouDenominator denom = IouDenominator::union_area);

/// Scores every case and aggregates. Throws std::invalid_argument if empty.
EvalReport evaluate(std::span<const EvalCase> cases, double threshold = kDefaultThreshold,
                    IouDenominator denom = IouDenominator::union_area);

/// Aggregates already-scored scenes.
EvalReport aggregate(std::vector<SceneScore> scenes, double threshold, IouDenominator denom);

}  // namespace camforge
