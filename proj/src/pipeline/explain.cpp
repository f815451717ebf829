#include <chrono>

#include "camforge/error.hpp"
#include "camforge/pipeline.hpp"

namespace camforge {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

Explanation explain(const Image& image, const Detector& detector, const PipelineConfig& cfg,
                    const ExecOptions& exec) {
  cfg.validate();
  StageTimings timings;

  auto t0 = Clock::now();
  DetectorOutput base = detector.detect(image, true);
  if (base.layer_activations.empty()) throw PipelineError("detector returned no activations");
  const GridStack upsampled = upsample_layers(base.layer_activations, image.width(), image.height());
  timings.detect_ms = elapsed_ms(t0);

  t0 = Clock::now();
  ChannelSelection selection = select_channels(upsampled, cfg);
  const GridStack kept = gather_channels(upsampled, selection.kept_indices);
  timings.select_ms = elapsed_ms(t0);

  t0 = Clock::now();
  LocalScores local = local_score_maps(image, base.detections, kept, selection, detector, cfg, exec);
  timings.score_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const SuppressionResult sup = suppress_background(local.z, kept);
  Cam cam = assemble_cam(sup.z, sup.activations, cfg, image.width(), image.height(), sup.suppressed);
  timings.assemble_ms = elapsed_ms(t0);

  const std::size_t runs = base.detections.empty() ? 0 : kept.channels();
  return {std::move(cam), std::move(base.detections), std::move(selection), std::move(local.assignment), runs,
          timings};
}

}  // namespace camforge
