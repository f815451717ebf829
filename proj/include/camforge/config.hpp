#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "camforge/metrics.hpp"
#include "camforge/pipeline.hpp"

namespace camforge {

enum class Method { crowncam, scorecam, eigencam };

struct BackendSpec {
  enum class Kind { synthetic, external };
  Kind kind = Kind::synthetic;
  std::filesystem::path exchange_dir;

  bool operator==(const BackendSpec&) const = default;
};

struct RunConfig {
  Method method = Method::crowncam;
  BackendSpec backend;
  PipelineConfig pipeline;
  double threshold = kDefaultThreshold;
  IouDenominator iou_denominator = IouDenominator::union_area;
  std::size_t jobs = 1;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

Method parse_method(std::string_view text);
std::string to_string(Method m);

/// "synthetic" or "external:<exchange dir>".
BackendSpec parse_backend(std::string_view text);
std::string to_string(const BackendSpec& b);

std::string to_string(IouDenominator d);
std::string to_string(ScoreReduction r);
std::string to_string(OverlapCombine o);

/// Applies one dotted key. Unknown keys and malformed values throw
/// std::invalid_argument.
void apply_config_entry(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key = value` document; `#` starts a comment.
void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view source = "<config>");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Serializes every field in the same format apply_config_text reads.
std::string to_config_text(const RunConfig& cfg);

}  // namespace camforge
