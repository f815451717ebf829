#include "camforge/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace camforge {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument(std::string(key) + ": not a number: '" + std::string(value) + "'");
  }
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw std::invalid_argument(std::string(key) + ": not a count: '" + std::string(value) + "'");
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void RunConfig::validate() const {
  pipeline.validate();
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in [0, 1]");
  if (jobs == 0) throw std::invalid_argument("jobs must be at least 1");
  if (backend.kind == BackendSpec::Kind::external && backend.exchange_dir.empty()) {
    throw std::invalid_argument("external backend needs an exchange directory");
  }
}

Method parse_method(std::string_view text) {
  if (text == "crowncam") return Method::crowncam;
  if (text == "scorecam") return Method::scorecam;
  if (text == "eigencam") return Method::eigencam;
  throw std::invalid_argument("unknown method '" + std::string(text) + "' (crowncam|scorecam|eigencam)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::crowncam: return "crowncam";
    case Method::scorecam: return "scorecam";
    case Method::eigencam: return "eigencam";
  }
  return "?";
}

BackendSpec parse_backend(std::string_view text) {
  if (text == "synthetic") return {};
  constexpr std::string_view prefix = "external:";
  if (text.substr(0, prefix.size()) == prefix && text.size() > prefix.size()) {
    return {BackendSpec::Kind::external, std::filesystem::path(std::string(text.substr(prefix.size())))};
  }
  throw std::invalid_argument("unknown backend '" + std::string(text) + "' (synthetic|external:<dir>)");
}

std::string to_string(const BackendSpec& b) {
  return b.kind == BackendSpec::Kind::synthetic ? "synthetic" : "external:" + b.exchange_dir.string();
}

std::string to_string(IouDenominator d) { return d == IouDenominator::union_area ? "union" : "sum"; }
std::string to_string(ScoreReduction r) { return r == ScoreReduction::pixelwise ? "pixelwise" : "global_sum"; }
std::string to_string(OverlapCombine o) { return o == OverlapCombine::max ? "max" : "sum"; }

void apply_config_entry(RunConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "method") {
    cfg.method = parse_method(value);
  } else if (key == "backend") {
    cfg.backend = parse_backend(value);
  } else if (key == "threshold") {
    cfg.threshold = parse_double(key, value);
  } else if (key == "jobs") {
    cfg.jobs = parse_count(key, value);
  } else if (key == "iou_denominator") {
    if (value == "union") cfg.iou_denominator = IouDenominator::union_area;
    else if (value == "sum") cfg.iou_denominator = IouDenominator::sum;
    else throw std::invalid_argument("iou_denominator must be union or sum");
  } else if (key == "pipeline.channel_keep_fraction") {
    cfg.pipeline.channel_keep_fraction = parse_double(key, value);
  } else if (key == "pipeline.sigma_sq") {
    cfg.pipeline.sigma_sq = parse_double(key, value);
  } else if (key == "pipeline.match_iou_min") {
    cfg.pipeline.match_iou_min = parse_double(key, value);
  } else if (key == "pipeline.epsilon") {
    cfg.pipeline.epsilon = parse_double(key, value);
  } else if (key == "pipeline.score_reduction") {
    if (value == "pixelwise") cfg.pipeline.score_reduction = ScoreReduction::pixelwise;
    else if (value == "global_sum") cfg.pipeline.score_reduction = ScoreReduction::global_sum;
    else throw std::invalid_argument("pipeline.score_reduction must be pixelwise or global_sum");
  } else if (key == "pipeline.overlap_combine") {
    if (value == "max") cfg.pipeline.overlap_combine = OverlapCombine::max;
    else if (value == "sum") cfg.pipeline.overlap_combine = OverlapCombine::sum;
    else throw std::invalid_argument("pipeline.overlap_combine must be max or sum");
  } else {
    throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
  }
}

void apply_config_text(RunConfig& cfg, std::string_view text, std::string_view source) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(std::string(source) + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream out;
  out << "method = " << to_string(cfg.method) << '\n'
      << "backend = " << to_string(cfg.backend) << '\n'
      << "threshold = " << format_double(cfg.threshold) << '\n'
      << "iou_denominator = " << to_string(cfg.iou_denominator) << '\n'
      << "jobs = " << cfg.jobs << '\n'
      << "pipeline.channel_keep_fraction = " << format_double(cfg.pipeline.channel_keep_fraction) << '\n'
      << "pipeline.sigma_sq = " << format_double(cfg.pipeline.sigma_sq) << '\n'
      << "pipeline.match_iou_min = " << format_double(cfg.pipeline.match_iou_min) << '\n'
      << "pipeline.epsilon = " << format_double(cfg.pipeline.epsilon) << '\n'
      << "pipeline.score_reduction = " << to_string(cfg.pipeline.score_reduction) << '\n'
      << "pipeline.overlap_combine = " << to_string(cfg.pipeline.overlap_combine) << '\n';
  return out.str();
}

}  // namespace camforge
