// camforge: Crown-CAM explanations and CAMIoU evaluation for crown detectors.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "camforge/commands.hpp"

namespace {

using namespace camforge;

struct CommonFlags {
  std::string config;
  std::string method;
  std::string backend;
  std::optional<double> threshold;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--method", f.method, "crowncam | scorecam | eigencam");
  cmd->add_option("--backend", f.backend, "synthetic | external:<exchange dir>");
  cmd->add_option("--threshold", f.threshold, "CAM binarization threshold");
  cmd->add_option("--jobs", f.jobs, "parallel workers");
}

RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) apply_config_file(cfg, f.config);
  if (!f.method.empty()) cfg.method = parse_method(f.method);
  if (!f.backend.empty()) cfg.backend = parse_backend(f.backend);
  if (f.threshold) cfg.threshold = *f.threshold;
  if (f.jobs) cfg.jobs = *f.jobs;
  cfg.validate();
  return cfg;
}

// "N" or "A-B".
std::pair<std::size_t, std::size_t> parse_tree_range(const std::string& text) {
  const auto dash = text.find('-');
  if (dash == std::string::npos) {
    const auto n = std::stoul(text);
    return {n, n};
  }
  return {std::stoul(text.substr(0, dash)), std::stoul(text.substr(dash + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camforge: visual explanations for tree-crown detectors"};
  app.require_subcommand(1);

  GenOptions gen;
  std::string trees = "5";
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen", "generate seeded synthetic scenes");
  gen_cmd->add_option("--seed", gen.seed, "run seed");
  gen_cmd->add_option("--count", gen.count, "number of scenes");
  gen_cmd->add_option("--trees", trees, "trees per scene: N or A-B");
  gen_cmd->add_option("--size", gen.size, "scene width and height in pixels");
  gen_cmd->add_option("--out", gen_out, "output directory")->required();

  CommonFlags explain_flags;
  std::string explain_image, explain_out;
  auto* explain_cmd = app.add_subcommand("explain", "explain one image");
  add_common(explain_cmd, explain_flags);
  explain_cmd->add_option("--image", explain_image, "input PNG")->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--out", explain_out, "output directory")->required();

  CommonFlags eval_flags;
  std::string eval_scenes, eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "CAMIoU over a scene directory");
  add_common(eval_cmd, eval_flags);
  eval_cmd->add_option("--scenes", eval_scenes, "directory of scene_<i>.png + .gt.json")->required();
  eval_cmd->add_option("--out", eval_out, "output directory for report.json")->required();

  CommonFlags chan_flags;
  std::string chan_image, chan_out;
  auto* chan_cmd = app.add_subcommand("channels", "per-channel KL scores and selection");
  add_common(chan_cmd, chan_flags);
  chan_cmd->add_option("--image", chan_image, "input PNG")->required()->check(CLI::ExistingFile);
  chan_cmd->add_option("--out", chan_out, "output directory for channels.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      std::tie(gen.trees_min, gen.trees_max) = parse_tree_range(trees);
      gen.out_dir = gen_out;
      cmd_gen(gen);
      std::cout << "wrote " << gen.count << " scenes to " << gen_out << '\n';
    } else if (*explain_cmd) {
      const RunConfig cfg = resolve(explain_flags);
      const auto detector = make_detector(cfg.backend);
      const auto out = cmd_explain(cfg, *detector, explain_image, explain_out);
      std::cout << "wrote " << out.heatmap.string() << ", " << out.cam.string() << ", " << out.meta.string() << '\n';
    } else if (*eval_cmd) {
      const RunConfig cfg = resolve(eval_flags);
      const auto detector = make_detector(cfg.backend);
      const auto doc = cmd_evaluate(cfg, *detector, eval_scenes, eval_out);
      std::cout << to_string(cfg.method) << ": CAMIoU_FG " << doc.camiou_fg_pct << "  CAMIoU_BG "
                << doc.camiou_bg_pct << "  (" << doc.evaluated << " evaluated, " << doc.failed << " failed)\n";
      for (const auto& row : doc.rows) {
        if (!row.error.empty()) std::cerr << row.scene << ": " << row.error << '\n';
      }
      if (doc.evaluated == 0) return 1;
    } else if (*chan_cmd) {
      const RunConfig cfg = resolve(chan_flags);
      const auto detector = make_detector(cfg.backend);
      const auto report = cmd_channels(cfg, *detector, chan_image, chan_out);
      std::cout << report.kept << " of " << report.total << " channels kept\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "camforge: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
