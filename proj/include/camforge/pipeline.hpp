#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "camforge/detector.hpp"
#include "camforge/grid.hpp"

namespace camforge {

enum class ScoreReduction { pixelwise, global_sum };
enum class OverlapCombine { max, sum };

struct PipelineConfig {
  double channel_keep_fraction = 0.5;
  double sigma_sq = 0.7;
  double match_iou_min = 0.1;
  double epsilon = 1e-8;
  ScoreReduction score_reduction = ScoreReduction::pixelwise;
  OverlapCombine overlap_combine = OverlapCombine::max;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

struct ExecOptions {
  /// Upper bound on concurrent masked-inference calls; the backend's own
  /// max_concurrency() also applies.
  std::size_t workers = 1;
};

struct ChannelSelection {
  /// One score per upsampled channel, layer-major.
  std::vector<double> kl_scores;
  /// Ascending indices of the retained channels.
  std::vector<std::size_t> kept_indices;
};

/// One original detection paired with its counterpart from a masked run.
struct BoxMatch {
  std::size_t original_index = 0;
  Detection masked;
  double score = 0.0;
};

/// Per kept channel, in the order of ChannelSelection::kept_indices.
struct ScoreAssignment {
  std::vector<std::vector<BoxMatch>> per_channel;
};

struct Cam {
  Grid2D raw;
  Grid2D normalized;
  std::size_t suppressed_channels = 0;

  static Cam zeros(std::size_t width, std::size_t height, std::size_t suppressed = 0) {
    return {Grid2D(width, height), Grid2D(width, height), suppressed};
  }
};

/// max(1, round_half_up(fraction * total)), never more than `total`.
std::size_t kept_channel_count(std::size_t total, double fraction);

/// Upsamples every layer to (width, height) and concatenates them layer-major.
GridStack upsample_layers(const std::vector<GridStack>& layers, std::size_t width, std::size_t height);

GridStack gather_channels(const GridStack& stack, const std::vector<std::size_t>& indices);

/// Ranks channels by KL divergence of each map against the pixelwise mean of
/// all other maps and keeps the top fraction (ties to the lower index).
ChannelSelection select_channels(const GridStack& upsampled, const PipelineConfig& cfg);

/// Greedy maximum-IoU one-to-one matching. Returns (original, masked) index
/// pairs sorted by original index.
std::vector<std::pair<std::size_t, std::size_t>> greedy_match(const DetectionSet& original,
                                                              const DetectionSet& masked, double iou_min);

/// IoU(original, masked) + |confidence difference|.
double local_score(const Detection& original, const Detection& masked) noexcept;

/// exp(-(u^2 + v^2) / (2 sigma_sq)) for box-normalized u, v.
double gaussian_weight(double u, double v, double sigma_sq) noexcept;

/// ceil(width) x ceil(height) patch whose first and last samples sit at the
/// normalized box edges (-1 and +1). Peak 1 at the centre for odd sizes.
/// Kept in double; values are narrowed only when written into a score map.
Grid<double> gaussian_kernel(const BBox& box, double sigma_sq);

/// Writes scale * gaussian_kernel(box) into z with its top-left at
/// (floor(x_min), floor(y_min)), clipped to z.
void splat_gaussian(Grid2D& z, const BBox& box, double scale, double sigma_sq, OverlapCombine combine);

struct LocalScores {
  ScoreAssignment assignment;
  GridStack z;
};

/// Masks the image with each kept channel, re-runs the detector, matches the
/// masked detections to `original` and fits score-scaled Gaussians into one
/// zero-initialised map per channel.
LocalScores local_score_maps(const Image& image, const DetectionSet& original, const GridStack& kept,
                             const ChannelSelection& selection, const Detector& detector,
                             const PipelineConfig& cfg, const ExecOptions& exec = {});

struct SuppressionResult {
  GridStack z;
  GridStack activations;
  /// Positions (within the kept stack) of the surviving channels.
  std::vector<std::size_t> surviving;
  std::size_t suppressed = 0;
};

/// Drops every channel whose score map sums to exactly zero.
SuppressionResult suppress_background(const GridStack& z, const GridStack& kept);

/// ReLU(sum_c softmax(Z)_c * U_c). An empty score stack yields an all-zero CAM.
Cam assemble_cam(const GridStack& z_hat, const GridStack& u_hat, const PipelineConfig& cfg, std::size_t width,
                 std::size_t height, std::size_t suppressed = 0);

struct StageTimings {
  double detect_ms = 0.0;
  double select_ms = 0.0;
  double score_ms = 0.0;
  double assemble_ms = 0.0;
};

struct Explanation {
  Cam cam;
  DetectionSet detections;
  ChannelSelection selection;
  ScoreAssignment scores;
  std::size_t masked_runs = 0;
  StageTimings timings;
};

Explanation explain(const Image& image, const Detector& detector, const PipelineConfig& cfg,
                    const ExecOptions& exec = {});

/// Shared by the baselines: masks `image` with minmax_normalize(channel),
/// detects, and returns scored matches against `original`.
std::vector<BoxMatch> score_masked_run(const Image& image, const Grid2D& channel, const DetectionSet& original,
                                       const Detector& detector, const PipelineConfig& cfg);

}  // namespace camforge
