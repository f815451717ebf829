#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "camforge/error.hpp"
#include "camforge/parallel.hpp"
#include "camforge/pipeline.hpp"

namespace camforge {

std::vector<std::pair<std::size_t, std::size_t>> greedy_match(const DetectionSet& original,
                                                              const DetectionSet& masked, double iou_min) {
  struct Candidate {
    double overlap;
    std::size_t k;
    std::size_t m;
  };
  std::vector<Candidate> candidates;
  for (std::size_t k = 0; k < original.size(); ++k) {
    for (std::size_t m = 0; m < masked.size(); ++m) {
      const double o = iou(original[k].box, masked[m].box);
      if (o >= iou_min) candidates.push_back({o, k, m});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.overlap != b.overlap) return a.overlap > b.overlap;
    return std::tie(a.k, a.m) < std::tie(b.k, b.m);
  });

  std::vector<bool> used_k(original.size(), false);
  std::vector<bool> used_m(masked.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& c : candidates) {
    if (used_k[c.k] || used_m[c.m]) continue;
    used_k[c.k] = used_m[c.m] = true;
    out.emplace_back(c.k, c.m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double local_score(const Detection& original, const Detection& masked) noexcept {
  return iou(original.box, masked.box) + std::abs(original.confidence - masked.confidence);
}

double gaussian_weight(double u, double v, double sigma_sq) noexcept {
  return std::exp(-(u * u + v * v) / (2.0 * sigma_sq));
}

Grid<double> gaussian_kernel(const BBox& box, double sigma_sq) {
  if (!box.valid()) throw std::invalid_argument("gaussian_kernel: degenerate box");
  if (!(sigma_sq > 0.0)) throw std::invalid_argument("gaussian_kernel: sigma_sq must be positive");
  const auto pw = static_cast<std::size_t>(std::ceil(box.width()));
  const auto ph = static_cast<std::size_t>(std::ceil(box.height()));
  const auto normalized = [](std::size_t i, std::size_t n) {
    return n == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  Grid<double> patch(pw, ph);
  for (std::size_t v = 0; v < ph; ++v) {
    const double vn = normalized(v, ph);
    for (std::size_t u = 0; u < pw; ++u) {
      patch(u, v) = gaussian_weight(normalized(u, pw), vn, sigma_sq);
    }
  }
  return patch;
}

void splat_gaussian(Grid2D& z, const BBox& box, double scale, double sigma_sq, OverlapCombine combine) {
  const Grid<double> patch = gaussian_kernel(box, sigma_sq);
  const auto x0 = static_cast<std::ptrdiff_t>(std::floor(box.x_min));
  const auto y0 = static_cast<std::ptrdiff_t>(std::floor(box.y_min));
  const auto zw = static_cast<std::ptrdiff_t>(z.width());
  const auto zh = static_cast<std::ptrdiff_t>(z.height());
  for (std::size_t v = 0; v < patch.height(); ++v) {
    const std::ptrdiff_t y = y0 + static_cast<std::ptrdiff_t>(v);
    if (y < 0 || y >= zh) continue;
    for (std::size_t u = 0; u < patch.width(); ++u) {
      const std::ptrdiff_t x = x0 + static_cast<std::ptrdiff_t>(u);
      if (x < 0 || x >= zw) continue;
      float& cell = z(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
      const auto value = static_cast<float>(scale * patch(u, v));
      cell = combine == OverlapCombine::max ? std::max(cell, value) : cell + value;
    }
  }
}

std::vector<BoxMatch> score_masked_run(const Image& image, const Grid2D& channel, const DetectionSet& original,
                                       const Detector& detector, const PipelineConfig& cfg) {
  const Image masked_image = hadamard_mask(image, minmax_normalize(channel));
  const DetectionSet masked = detector.detect(masked_image, false).detections;
  std::vector<BoxMatch> out;
  for (const auto& [k, m] : greedy_match(original, masked, cfg.match_iou_min)) {
    out.push_back({k, masked[m], local_score(original[k], masked[m])});
  }
  return out;
}

LocalScores local_score_maps(const Image& image, const DetectionSet& original, const GridStack& kept,
                             const ChannelSelection& selection, const Detector& detector,
                             const PipelineConfig& cfg, const ExecOptions& exec) {
  cfg.validate();
  if (kept.empty()) throw std::invalid_argument("local_score_maps: no channels selected");
  if (kept.channels() != selection.kept_indices.size()) {
    throw std::invalid_argument("local_score_maps: kept stack does not match the selection");
  }
  if (kept.width() != image.width() || kept.height() != image.height()) {
    throw std::invalid_argument("local_score_maps: activations are not at image resolution");
  }

  const std::size_t n = kept.channels();
  LocalScores out;
  out.assignment.per_channel.resize(n);
  std::vector<Grid2D> z(n, Grid2D(image.width(), image.height()));

  // Nothing can match an empty original set, so the masked runs are skipped.
  if (!original.empty()) {
    const std::size_t workers = std::min(exec.workers, detector.max_concurrency());
    parallel_for(n, workers, [&](std::size_t c) {
      std::vector<BoxMatch> matches;
      try {
        matches = score_masked_run(image, kept[c], original, detector, cfg);
      } catch (const std::exception& e) {
        throw PipelineError("masked inference failed for channel " + std::to_string(selection.kept_indices[c]) +
                            ": " + e.what());
      }
      for (const auto& m : matches) {
        splat_gaussian(z[c], m.masked.box, m.score, cfg.sigma_sq, cfg.overlap_combine);
      }
      out.assignment.per_channel[c] = std::move(matches);
    });
  }

  out.z = GridStack(std::move(z));
  return out;
}

}  // namespace camforge
