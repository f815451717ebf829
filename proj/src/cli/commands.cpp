#include "camforge/commands.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <stdexcept>

#include "camforge/baselines.hpp"
#include "camforge/cct.hpp"
#include "camforge/error.hpp"
#include "camforge/external_detector.hpp"
#include "camforge/parallel.hpp"
#include "camforge/png_io.hpp"
#include "camforge/render.hpp"
#include "camforge/synthetic.hpp"

namespace camforge {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir.string());
}

std::optional<std::uint64_t> scene_index(const fs::path& p) {
  const std::string stem = p.stem().string();
  constexpr std::string_view prefix = "scene_";
  if (stem.rfind(prefix, 0) != 0 || stem.size() == prefix.size()) return std::nullopt;
  const std::string digits = stem.substr(prefix.size());
  if (!std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
    return std::nullopt;
  }
  return std::stoull(digits);
}

}  // namespace

std::unique_ptr<Detector> make_detector(const BackendSpec& backend) {
  if (backend.kind == BackendSpec::Kind::synthetic) return std::make_unique<SyntheticDetector>();
  ExternalDetectorOptions opt;
  opt.exchange_dir = backend.exchange_dir;
  opt.timeout = bridge_timeout_from_env();
  return std::make_unique<ExternalDetector>(opt);
}

std::uint64_t scene_seed(std::uint64_t run_seed, std::size_t index) noexcept {
  return splitmix64(splitmix64(run_seed) ^ static_cast<std::uint64_t>(index));
}

SyntheticScene gen_scene(const GenOptions& options, std::size_t index) {
  if (options.trees_min > options.trees_max) throw std::invalid_argument("trees range is inverted");
  const std::uint64_t seed = scene_seed(options.seed, index);
  const std::size_t span = options.trees_max - options.trees_min + 1;
  const std::size_t trees = options.trees_min + static_cast<std::size_t>(splitmix64(seed ^ 0x7472656573ull) % span);
  return gen_synthetic_scene(seed, trees, options.size, options.size);
}

void cmd_gen(const GenOptions& options) {
  if (options.trees_min > options.trees_max) throw std::invalid_argument("trees range is inverted");
  ensure_dir(options.out_dir);
  for (std::size_t i = 0; i < options.count; ++i) {
    const SyntheticScene scene = gen_scene(options, i);
    const std::string stem = "scene_" + std::to_string(i);
    write_png(options.out_dir / (stem + ".png"), to_pixels(scene.image));
    write_json_file(options.out_dir / (stem + ".gt.json"),
                    ground_truth_to_json({options.size, options.size, scene.seed, scene.ground_truth}));
  }
}

MethodResult run_method(const RunConfig& cfg, const Detector& detector, const Image& image,
                        const ExecOptions& exec) {
  switch (cfg.method) {
    case Method::crowncam: {
      Explanation e = explain(image, detector, cfg.pipeline, exec);
      return {std::move(e.cam), std::move(e.detections), std::move(e.selection), std::move(e.scores),
              e.masked_runs, e.timings};
    }
    case Method::scorecam: {
      const auto t0 = std::chrono::steady_clock::now();
      ScoreCamResult r = score_cam_detailed(image, detector, cfg.pipeline, exec);
      StageTimings t;
      t.score_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return {std::move(r.cam), std::move(r.detections), std::nullopt, std::nullopt, r.masked_runs, t};
    }
    case Method::eigencam: {
      const auto t0 = std::chrono::steady_clock::now();
      const DetectorOutput base = detector.detect(image, true);
      if (base.layer_activations.empty()) throw PipelineError("detector returned no activations");
      Cam cam = eigen_cam_from_stack(upsample_layers(base.layer_activations, image.width(), image.height()));
      StageTimings t;
      t.assemble_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      return {std::move(cam), base.detections, std::nullopt, std::nullopt, 0, t};
    }
  }
  throw std::invalid_argument("unknown method");
}

ConfidenceShift confidence_shift(const DetectionSet& original, const ScoreAssignment& scores) {
  ConfidenceShift s;
  for (const auto& channel : scores.per_channel) {
    for (const auto& m : channel) {
      ++s.matches;
      const double before = original[m.original_index].confidence;
      if (m.masked.confidence < before) ++s.drops;
      else if (m.masked.confidence > before) ++s.rises;
      else ++s.unchanged;
    }
  }
  return s;
}

ExplainArtifacts cmd_explain(const RunConfig& cfg, const Detector& detector, const fs::path& image_path,
                             const fs::path& out_dir) {
  cfg.validate();
  const Image image = read_png(image_path);
  ensure_dir(out_dir);
  const MethodResult r = run_method(cfg, detector, image, {cfg.jobs});

  ExplainArtifacts out{out_dir / "cam.png", out_dir / "cam.cct", out_dir / "meta.json"};
  write_png(out.heatmap, render_heatmap(image, r.cam.normalized));
  write_cct(out.cam, grid_to_tensor(r.cam.raw));

  Json meta = {{"method", to_string(cfg.method)},
               {"backend", detector.name()},
               {"image", image_path.string()},
               {"width", image.width()},
               {"height", image.height()},
               {"detections", detections_to_json(r.detections)},
               {"suppressed_channels", r.cam.suppressed_channels},
               {"masked_inference_runs", r.masked_runs}};
  if (r.selection) {
    meta["kept_channels"] = r.selection->kept_indices;
  }
  if (r.scores) {
    const ConfidenceShift s = confidence_shift(r.detections, *r.scores);
    meta["confidence_shift"] = {{"matches", s.matches}, {"drops", s.drops}, {"rises", s.rises}, {"unchanged", s.unchanged}};
  }
  meta["pipeline"] = pipeline_to_json(cfg.pipeline);
  meta["timings_ms"] = {{"detect", r.timings.detect_ms},
                        {"select", r.timings.select_ms},
                        {"score", r.timings.score_ms},
                        {"assemble", r.timings.assemble_ms}};
  write_json_file(out.meta, meta);
  return out;
}

std::vector<fs::path> list_scenes(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("scenes directory not found: " + dir.string());
  std::vector<fs::path> scenes;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") scenes.push_back(entry.path());
  }
  std::sort(scenes.begin(), scenes.end(), [](const fs::path& a, const fs::path& b) {
    const auto ia = scene_index(a);
    const auto ib = scene_index(b);
    if (ia && ib && *ia != *ib) return *ia < *ib;
    if (ia.has_value() != ib.has_value()) return ia.has_value();
    return a.filename() < b.filename();
  });
  return scenes;
}

EvaluationDocument cmd_evaluate(const RunConfig& cfg, const Detector& detector, const fs::path& scenes_dir,
                                const fs::path& out_dir) {
  cfg.validate();
  const std::vector<fs::path> scenes = list_scenes(scenes_dir);
  if (scenes.empty()) throw std::runtime_error("no scene images in " + scenes_dir.string());
  ensure_dir(out_dir);

  std::vector<SceneRow> rows(scenes.size());
  const std::size_t workers = std::min(cfg.jobs, detector.max_concurrency());
  parallel_for(scenes.size(), workers, [&](std::size_t i) {
    SceneRow& row = rows[i];
    row.scene = scenes[i].stem().string();
    try {
      const fs::path gt_path = scenes[i].parent_path() / (row.scene + ".gt.json");
      if (!fs::exists(gt_path)) throw std::runtime_error("missing ground truth " + gt_path.filename().string());
      const GroundTruthFile gt = ground_truth_from_json(read_json_file(gt_path));
      const Image image = read_png(scenes[i]);
      const MethodResult r = run_method(cfg, detector, image, {1});
      row.score = score_scene({row.scene, r.cam.normalized, gt.boxes}, cfg.threshold, cfg.iou_denominator);
      if (r.scores) row.shift = confidence_shift(r.detections, *r.scores);
    } catch (const std::exception& e) {
      row.score.reset();
      row.shift.reset();
      row.error = e.what();
    }
  });

  std::vector<SceneScore> scored;
  for (const auto& row : rows) {
    if (row.score) scored.push_back(*row.score);
  }
  const EvalReport agg = aggregate(scored, cfg.threshold, cfg.iou_denominator);

  EvaluationDocument doc;
  doc.method = to_string(cfg.method);
  doc.threshold = cfg.threshold;
  doc.denominator = cfg.iou_denominator;
  doc.pipeline = cfg.pipeline;
  doc.rows = std::move(rows);
  doc.camiou_fg_pct = agg.camiou_fg_pct;
  doc.camiou_bg_pct = agg.camiou_bg_pct;
  doc.evaluated = scored.size();
  doc.failed = scenes.size() - scored.size();
  doc.empty_cam = agg.empty_cam_count;
  doc.empty_gt = agg.empty_gt_count;
  write_json_file(out_dir / "report.json", evaluation_to_json(doc));
  return doc;
}

ChannelReport cmd_channels(const RunConfig& cfg, const Detector& detector, const fs::path& image_path,
                           const fs::path& out_dir) {
  cfg.validate();
  const Image image = read_png(image_path);
  ensure_dir(out_dir);
  const DetectorOutput base = detector.detect(image, true);
  if (base.layer_activations.empty()) throw PipelineError("detector returned no activations");
  const GridStack upsampled = upsample_layers(base.layer_activations, image.width(), image.height());
  const ChannelSelection sel = select_channels(upsampled, cfg.pipeline);

  ChannelReport report;
  report.keep_fraction = cfg.pipeline.channel_keep_fraction;
  report.total = upsampled.channels();
  report.kept = sel.kept_indices.size();
  std::size_t index = 0;
  for (std::size_t layer = 0; layer < base.layer_activations.size(); ++layer) {
    for (std::size_t c = 0; c < base.layer_activations[layer].channels(); ++c, ++index) {
      const bool kept = std::binary_search(sel.kept_indices.begin(), sel.kept_indices.end(), index);
      report.rows.push_back({index, layer, c, sel.kl_scores[index], kept});
    }
  }
  write_json_file(out_dir / "channels.json", channel_report_to_json(report));
  return report;
}

}  // namespace camforge
