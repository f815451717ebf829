#pragma once

#include <vector>

#include "camforge/pipeline.hpp"

namespace camforge {

struct ScoreCamResult {
  Cam cam;
  /// Per upsampled channel: sum of the per-box local scores of its masked run.
  std::vector<double> channel_scores;
  /// softmax(channel_scores).
  std::vector<double> weights;
  DetectionSet detections;
  std::size_t masked_runs = 0;
};

/// Score-CAM adapted to detection: every channel, one global score each, no
/// selection and no suppression.
ScoreCamResult score_cam_detailed(const Image& image, const Detector& detector, const PipelineConfig& cfg,
                                  const ExecOptions& exec = {});

Cam score_cam(const Image& image, const Detector& detector, const PipelineConfig& cfg,
              const ExecOptions& exec = {});

struct PowerIterationOptions {
  double tolerance = 1e-10;
  int max_iterations = 500;
};

/// Leading right singular vector of the (pixels x channels) matrix of `stack`,
/// by power iteration on its Gram matrix from the normalized all-ones vector.
/// Throws NumericError if it does not settle within max_iterations.
std::vector<double> principal_direction(const GridStack& stack, const PowerIterationOptions& opt = {});

/// |M v| reshaped, with v = principal_direction(stack).
Cam eigen_cam_from_stack(const GridStack& stack, const PowerIterationOptions& opt = {});

/// Eigen-CAM. Detections are ignored.
Cam eigen_cam(const Image& image, const Detector& detector, const PowerIterationOptions& opt = {});

}  // namespace camforge
