#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "camforge/config.hpp"
#include "camforge/detector.hpp"
#include "camforge/pipeline.hpp"
#include "camforge/serialize.hpp"
#include "camforge/synthetic.hpp"

namespace camforge {

std::unique_ptr<Detector> make_detector(const BackendSpec& backend);

struct GenOptions {
  std::uint64_t seed = 0;
  std::size_t count = 1;
  /// Tree count per scene is drawn uniformly from [trees_min, trees_max].
  std::size_t trees_min = 5;
  std::size_t trees_max = 5;
  std::size_t size = 128;
  std::filesystem::path out_dir;
};

/// Per-scene seed derived from the run seed and the scene index.
std::uint64_t scene_seed(std::uint64_t run_seed, std::size_t index) noexcept;

/// Scene `index` of a gen run, in memory.
SyntheticScene gen_scene(const GenOptions& options, std::size_t index);

/// Writes scene_<i>.png and scene_<i>.gt.json for i in [0, count).
void cmd_gen(const GenOptions& options);

/// Output of any of the three explanation methods.
struct MethodResult {
  Cam cam;
  DetectionSet detections;
  std::optional<ChannelSelection> selection;
  std::optional<ScoreAssignment> scores;
  std::size_t masked_runs = 0;
  StageTimings timings;
};

MethodResult run_method(const RunConfig& cfg, const Detector& detector, const Image& image,
                        const ExecOptions& exec = {});

ConfidenceShift confidence_shift(const DetectionSet& original, const ScoreAssignment& scores);

struct ExplainArtifacts {
  std::filesystem::path heatmap;
  std::filesystem::path cam;
  std::filesystem::path meta;
};

/// Writes cam.png (heatmap overlay), cam.cct (raw CAM) and meta.json.
ExplainArtifacts cmd_explain(const RunConfig& cfg, const Detector& detector, const std::filesystem::path& image,
                             const std::filesystem::path& out_dir);

/// Scene images in `dir` (*.png, excluding rendered heatmaps), ordered by the
/// numeric suffix of scene_<i> and then by name.
std::vector<std::filesystem::path> list_scenes(const std::filesystem::path& dir);

/// Evaluates every scene in `scenes_dir` and writes report.json into
/// `out_dir`. Scenes that fail are reported as error rows and excluded from
/// the aggregate.
EvaluationDocument cmd_evaluate(const RunConfig& cfg, const Detector& detector,
                                const std::filesystem::path& scenes_dir, const std::filesystem::path& out_dir);

/// Writes channels.json with per-channel KL scores and kept flags.
ChannelReport cmd_channels(const RunConfig& cfg, const Detector& detector, const std::filesystem::path& image,
                           const std::filesystem::path& out_dir);

}  // namespace camforge
