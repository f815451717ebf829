#include <algorithm>
#include <string>

#include "camforge/baselines.hpp"
#include "camforge/error.hpp"
#include "camforge/parallel.hpp"

namespace camforge {

ScoreCamResult score_cam_detailed(const Image& image, const Detector& detector, const PipelineConfig& cfg,
                                  const ExecOptions& exec) {
  cfg.validate();
  DetectorOutput base = detector.detect(image, true);
  if (base.layer_activations.empty()) throw PipelineError("detector returned no activations");
  const GridStack upsampled = upsample_layers(base.layer_activations, image.width(), image.height());
  const std::size_t n = upsampled.channels();

  ScoreCamResult out{Cam::zeros(image.width(), image.height()), {}, {}, {}, 0};
  out.channel_scores.assign(n, 0.0);
  if (!base.detections.empty()) {
    const std::size_t workers = std::min(exec.workers, detector.max_concurrency());
    parallel_for(n, workers, [&](std::size_t c) {
      try {
        double total = 0.0;
        for (const auto& m : score_masked_run(image, upsampled[c], base.detections, detector, cfg)) {
          total += m.score;
        }
        out.channel_scores[c] = total;
      } catch (const std::exception& e) {
        throw PipelineError("masked inference failed for channel " + std::to_string(c) + ": " + e.what());
      }
    });
    out.masked_runs = n;
  }
  out.weights = softmax(out.channel_scores);

  const std::size_t pixels = image.width() * image.height();
  std::vector<double> acc(pixels, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    const auto u = upsampled[c].values();
    for (std::size_t i = 0; i < pixels; ++i) acc[i] += out.weights[c] * static_cast<double>(u[i]);
  }
  Grid2D raw(image.width(), image.height());
  for (std::size_t i = 0; i < pixels; ++i) raw.values()[i] = static_cast<float>(std::max(0.0, acc[i]));
  Grid2D normalized = minmax_normalize(raw);
  out.cam = Cam{std::move(raw), std::move(normalized), 0};
  out.detections = std::move(base.detections);
  return out;
}

Cam score_cam(const Image& image, const Detector& detector, const PipelineConfig& cfg, const ExecOptions& exec) {
  return score_cam_detailed(image, detector, cfg, exec).cam;
}

}  // namespace camforge
