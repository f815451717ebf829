#include "camforge/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace camforge {

Json box_to_json(const BBox& b) { return Json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw std::invalid_argument("box must be [x0, y0, x1, y1]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

Json detections_to_json(const DetectionSet& detections) {
  Json out = Json::array();
  for (const auto& d : detections) out.push_back({{"box", box_to_json(d.box)}, {"score", d.confidence}});
  return out;
}

DetectionSet detections_from_json(const Json& j) {
  std::vector<Detection> items;
  for (const auto& d : j) items.push_back({box_from_json(d.at("box")), d.at("score").get<double>()});
  return DetectionSet(std::move(items));
}

Json ground_truth_to_json(const GroundTruthFile& gt) {
  Json boxes = Json::array();
  for (const auto& b : gt.boxes) boxes.push_back(box_to_json(b));
  return {{"width", gt.width}, {"height", gt.height}, {"seed", gt.seed}, {"boxes", boxes}};
}

GroundTruthFile ground_truth_from_json(const Json& j) {
  GroundTruthFile gt;
  gt.width = j.value("width", std::size_t{0});
  gt.height = j.value("height", std::size_t{0});
  gt.seed = j.value("seed", std::uint64_t{0});
  for (const auto& b : j.at("boxes")) gt.boxes.push_back(box_from_json(b));
  return gt;
}

bool SceneRow::operator==(const SceneRow& o) const {
  const auto same_score = [](const std::optional<SceneScore>& a, const std::optional<SceneScore>& b) {
    if (a.has_value() != b.has_value()) return false;
    if (!a) return true;
    return a->name == b->name && a->camiou_fg == b->camiou_fg && a->camiou_bg == b->camiou_bg &&
           a->cam_empty == b->cam_empty && a->gt_empty == b->gt_empty;
  };
  return scene == o.scene && same_score(score, o.score) && shift == o.shift && error == o.error;
}

Json pipeline_to_json(const PipelineConfig& p) {
  return {{"channel_keep_fraction", p.channel_keep_fraction},
          {"sigma_sq", p.sigma_sq},
          {"match_iou_min", p.match_iou_min},
          {"epsilon", p.epsilon},
          {"score_reduction", to_string(p.score_reduction)},
          {"overlap_combine", to_string(p.overlap_combine)}};
}

PipelineConfig pipeline_from_json(const Json& j) {
  PipelineConfig p;
  p.channel_keep_fraction = j.at("channel_keep_fraction").get<double>();
  p.sigma_sq = j.at("sigma_sq").get<double>();
  p.match_iou_min = j.at("match_iou_min").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.score_reduction = j.at("score_reduction") == "pixelwise" ? ScoreReduction::pixelwise : ScoreReduction::global_sum;
  p.overlap_combine = j.at("overlap_combine") == "max" ? OverlapCombine::max : OverlapCombine::sum;
  return p;
}

Json evaluation_to_json(const EvaluationDocument& doc) {
  Json rows = Json::array();
  for (const auto& r : doc.rows) {
    Json row = {{"scene", r.scene}};
    if (r.score) {
      row["camiou_fg"] = r.score->camiou_fg;
      row["camiou_bg"] = r.score->camiou_bg;
      row["cam_empty"] = r.score->cam_empty;
      row["gt_empty"] = r.score->gt_empty;
    }
    if (r.shift) {
      row["confidence_shift"] = {{"matches", r.shift->matches},
                                 {"drops", r.shift->drops},
                                 {"rises", r.shift->rises},
                                 {"unchanged", r.shift->unchanged}};
    }
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(std::move(row));
  }
  return {{"format", "camforge-eval-1"},
          {"method", doc.method},
          {"threshold", doc.threshold},
          {"iou_denominator", to_string(doc.denominator)},
          {"aggregation", "per_image_mean"},
          {"pipeline", pipeline_to_json(doc.pipeline)},
          {"scenes", rows},
          {"aggregate",
           {{"camiou_fg", doc.camiou_fg_pct},
            {"camiou_bg", doc.camiou_bg_pct},
            {"evaluated", doc.evaluated},
            {"failed", doc.failed},
            {"empty_cam", doc.empty_cam},
            {"empty_gt", doc.empty_gt}}}};
}

EvaluationDocument evaluation_from_json(const Json& j) {
  EvaluationDocument doc;
  doc.method = j.at("method").get<std::string>();
  doc.threshold = j.at("threshold").get<double>();
  doc.denominator = j.at("iou_denominator") == "union" ? IouDenominator::union_area : IouDenominator::sum;
  doc.pipeline = pipeline_from_json(j.at("pipeline"));
  for (const auto& row : j.at("scenes")) {
    SceneRow r;
    r.scene = row.at("scene").get<std::string>();
    if (row.contains("camiou_fg")) {
      r.score = SceneScore{r.scene, row.at("camiou_fg").get<double>(), row.at("camiou_bg").get<double>(),
                           row.at("cam_empty").get<bool>(), row.at("gt_empty").get<bool>()};
    }
    if (row.contains("confidence_shift")) {
      const auto& s = row.at("confidence_shift");
      r.shift = ConfidenceShift{s.at("matches").get<std::size_t>(), s.at("drops").get<std::size_t>(),
                                s.at("rises").get<std::size_t>(), s.at("unchanged").get<std::size_t>()};
    }
    r.error = row.value("error", std::string{});
    doc.rows.push_back(std::move(r));
  }
  const auto& agg = j.at("aggregate");
  doc.camiou_fg_pct = agg.at("camiou_fg").get<double>();
  doc.camiou_bg_pct = agg.at("camiou_bg").get<double>();
  doc.evaluated = agg.at("evaluated").get<std::size_t>();
  doc.failed = agg.at("failed").get<std::size_t>();
  doc.empty_cam = agg.at("empty_cam").get<std::size_t>();
  doc.empty_gt = agg.at("empty_gt").get<std::size_t>();
  return doc;
}

Json channel_report_to_json(const ChannelReport& r) {
  Json rows = Json::array();
  for (const auto& c : r.rows) {
    rows.push_back({{"index", c.index}, {"layer", c.layer}, {"channel", c.channel}, {"kl", c.kl}, {"kept", c.kept}});
  }
  return {{"keep_fraction", r.keep_fraction}, {"total", r.total}, {"kept", r.kept}, {"channels", rows}};
}

ChannelReport channel_report_from_json(const Json& j) {
  ChannelReport r;
  r.keep_fraction = j.at("keep_fraction").get<double>();
  r.total = j.at("total").get<std::size_t>();
  r.kept = j.at("kept").get<std::size_t>();
  for (const auto& c : j.at("channels")) {
    r.rows.push_back({c.at("index").get<std::size_t>(), c.at("layer").get<std::size_t>(),
                      c.at("channel").get<std::size_t>(), c.at("kl").get<double>(), c.at("kept").get<bool>()});
  }
  return r;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << j.dump(2) << '\n';
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace camforge
