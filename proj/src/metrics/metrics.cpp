#include "camforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camforge {

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask cam_mask(const Grid2D& normalized, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in [0, 1]");
  BinaryMask mask(normalized.width(), normalized.height());
  const auto v = normalized.values();
  for (std::size_t i = 0; i < v.size(); ++i) mask.set(i, static_cast<double>(v[i]) >= threshold);
  return mask;
}

BinaryMask cam_mask(const Cam& cam, double threshold) { return cam_mask(cam.normalized, threshold); }

std::pair<BinaryMask, BinaryMask> fg_bg_masks(std::span<const BBox> boxes, std::size_t width,
                                              std::size_t height) {
  BinaryMask fg(width, height, false);
  BinaryMask bg(width, height, true);
  for (const BBox& b : boxes) {
    const auto x_lo = static_cast<std::size_t>(std::clamp(std::floor(b.x_min - 0.5), 0.0, double(width)));
    const auto y_lo = static_cast<std::size_t>(std::clamp(std::floor(b.y_min - 0.5), 0.0, double(height)));
    const auto x_hi = static_cast<std::size_t>(std::clamp(std::ceil(b.x_max), 0.0, double(width)));
    const auto y_hi = static_cast<std::size_t>(std::clamp(std::ceil(b.y_max), 0.0, double(height)));
    for (std::size_t y = y_lo; y < y_hi; ++y) {
      for (std::size_t x = x_lo; x < x_hi; ++x) {
        if (b.contains(static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
          fg.set(x, y, true);
          bg.set(x, y, false);
        }
      }
    }
  }
  return {std::move(fg), std::move(bg)};
}

double cam_iou(const BinaryMask& a, const BinaryMask& b, IouDenominator denom) {
  if (!a.same_shape(b)) throw std::invalid_argument("cam_iou: mask dimensions differ");
  std::size_t inter = 0, count_a = 0, count_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool pa = a.at(i);
    const bool pb = b.at(i);
    count_a += pa;
    count_b += pb;
    inter += pa && pb;
  }
  const std::size_t d = denom == IouDenominator::union_area ? count_a + count_b - inter : count_a + count_b;
  return d == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(d);
}

SceneScore score_scene(const EvalCase& c, double threshold, IouDenominator denom) {
  const BinaryMask cam = cam_mask(c.cam_normalized, threshold);
  const auto [fg, bg] = fg_bg_masks(c.ground_truth, c.cam_normalized.width(), c.cam_normalized.height());
  return {c.name, cam_iou(cam, fg, denom), cam_iou(cam, bg, denom), cam.count() == 0, fg.count() == 0};
}

EvalReport aggregate(std::vector<SceneScore> scenes, double threshold, IouDenominator denom) {
  EvalReport report;
  report.threshold = threshold;
  report.denominator = denom;
  if (!scenes.empty()) {
    double fg = 0.0, bg = 0.0;
    for (const auto& s : scenes) {
      fg += s.camiou_fg;
      bg += s.camiou_bg;
      report.empty_cam_count += s.cam_empty;
      report.empty_gt_count += s.gt_empty;
    }
    const auto n = static_cast<double>(scenes.size());
    report.camiou_fg_pct = 100.0 * fg / n;
    report.camiou_bg_pct = 100.0 * bg / n;
  }
  report.scenes = std::move(scenes);
  return report;
}

EvalReport evaluate(std::span<const EvalCase> cases, double threshold, IouDenominator denom) {
  if (cases.empty()) throw std::invalid_argument("evaluate: no scenes");
  std::vector<SceneScore> scores;
  scores.reserve(cases.size());
  for (const auto& c : cases) scores.push_back(score_scene(c, threshold, denom));
  return aggregate(std::move(scores), threshold, denom);
}

}  // namespace camforge
