#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "camforge/config.hpp"
#include "camforge/detector.hpp"
#include "camforge/metrics.hpp"

namespace camforge {

/// Insertion-ordered so every artifact has a fixed key order.
using Json = nlohmann::ordered_json;

Json box_to_json(const BBox& b);
BBox box_from_json(const Json& j);
Json detections_to_json(const DetectionSet& detections);
DetectionSet detections_from_json(const Json& j);

struct GroundTruthFile {
  std::size_t width = 0;
  std::size_t height = 0;
  std::uint64_t seed = 0;
  std::vector<BBox> boxes;

  bool operator==(const GroundTruthFile&) const = default;
};

Json ground_truth_to_json(const GroundTruthFile& gt);
GroundTruthFile ground_truth_from_json(const Json& j);

/// How masking moved confidences across all matched boxes of one scene.
/// The local score rewards a change in either direction.
struct ConfidenceShift {
  std::size_t matches = 0;
  std::size_t drops = 0;
  std::size_t rises = 0;
  std::size_t unchanged = 0;

  bool operator==(const ConfidenceShift&) const = default;
};

struct SceneRow {
  std::string scene;
  std::optional<SceneScore> score;
  std::optional<ConfidenceShift> shift;
  std::string error;

  bool operator==(const SceneRow&) const;
};

struct EvaluationDocument {
  std::string method;
  double threshold = kDefaultThreshold;
  IouDenominator denominator = IouDenominator::union_area;
  PipelineConfig pipeline;
  std::vector<SceneRow> rows;
  double camiou_fg_pct = 0.0;
  double camiou_bg_pct = 0.0;
  std::size_t evaluated = 0;
  std::size_t failed = 0;
  std::size_t empty_cam = 0;
  std::size_t empty_gt = 0;

  bool operator==(const EvaluationDocument&) const = default;
};

Json evaluation_to_json(const EvaluationDocument& doc);
EvaluationDocument evaluation_from_json(const Json& j);

struct ChannelRow {
  std::size_t index = 0;
  std::size_t layer = 0;
  std::size_t channel = 0;
  double kl = 0.0;
  bool kept = false;

  bool operator==(const ChannelRow&) const = default;
};

struct ChannelReport {
  double keep_fraction = 0.5;
  std::size_t total = 0;
  std::size_t kept = 0;
  std::vector<ChannelRow> rows;

  bool operator==(const ChannelReport&) const = default;
};

Json channel_report_to_json(const ChannelReport& r);
ChannelReport channel_report_from_json(const Json& j);

Json pipeline_to_json(const PipelineConfig& p);
PipelineConfig pipeline_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
/// Writes `dump(2)` plus a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace camforge
