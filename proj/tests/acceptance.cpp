// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "camforge/baselines.hpp"
#include "camforge/cct.hpp"
#include "camforge/commands.hpp"
#include "camforge/metrics.hpp"
#include "camforge/png_io.hpp"
#include "camforge/synthetic.hpp"
#include "test_support.hpp"

using namespace camforge;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- metrics oracle --------------------------------------------------------

void metrics_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    std::bernoulli_distribution da(std::uniform_real_distribution<double>(0, 1)(rng));
    std::bernoulli_distribution db(std::uniform_real_distribution<double>(0, 1)(rng));
    BinaryMask a(16, 16), b(16, 16);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < 256; ++i) {
      const bool x = da(rng), y = db(rng);
      a.set(i, x);
      b.set(i, y);
      inter += x && y;
      uni += x || y;
    }
    const double want = uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
    mismatches += cam_iou(a, b) != want;
  }
  const double secs = seconds_since(t0);
  report(mismatches == 0 && secs < 1.0, "metrics oracle equivalence",
         fmt("500 pairs, %zu mismatches, %.3f s (limit 1 s)", mismatches, secs));
}

// --- numerics oracle -------------------------------------------------------

double tent(const Grid<double>& src, std::size_t tw, std::size_t th, std::size_t x, std::size_t y) {
  auto coord = [](std::size_t d, std::size_t n, std::size_t m) {
    return std::clamp((d + 0.5) * static_cast<double>(n) / static_cast<double>(m) - 0.5, 0.0, n - 1.0);
  };
  const double sx = coord(x, src.width(), tw), sy = coord(y, src.height(), th);
  double acc = 0.0;
  for (std::size_t j = 0; j < src.height(); ++j)
    for (std::size_t i = 0; i < src.width(); ++i)
      acc += std::max(0.0, 1 - std::abs(sx - double(i))) * std::max(0.0, 1 - std::abs(sy - double(j))) * src(i, j);
  return acc;
}

void numerics_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1002);
  double bilinear_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> sd(1, 8);
    const std::size_t w = sd(rng), h = sd(rng);
    const std::size_t tw = std::uniform_int_distribution<std::size_t>(w, 64)(rng);
    const std::size_t th = std::uniform_int_distribution<std::size_t>(h, 64)(rng);
    const auto src = camforge::testing::random_grid_d(rng, w, h);
    const auto out = bilinear_upsample(src, tw, th);
    for (std::size_t y = 0; y < th; ++y)
      for (std::size_t x = 0; x < tw; ++x) bilinear_err = std::max(bilinear_err, std::abs(out(x, y) - tent(src, tw, th, x, y)));
  }

  double kl_min = 1e300, kl_self = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + trial % 64;
    const auto p = to_distribution(camforge::testing::random_grid_d(rng, n, 1, -5, 5), 1e-8);
    const auto q = to_distribution(camforge::testing::random_grid_d(rng, n, 1, -5, 5), 1e-8);
    kl_min = std::min(kl_min, kl_divergence(p, q));
    kl_self = std::max(kl_self, std::abs(kl_divergence(p, p)));
  }

  double softmax_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    GridStack s;
    for (int c = 0; c < 1 + trial % 16; ++c) s.push_back(camforge::testing::random_grid(rng, 12, 12, -30, 30));
    const auto p = pixelwise_channel_softmax(s);
    for (std::size_t i = 0; i < 144; ++i) {
      double sum = 0.0;
      for (const auto& g : p) sum += g.values()[i];
      softmax_err = std::max(softmax_err, std::abs(sum - 1.0));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = bilinear_err <= 1e-9 && kl_min >= -1e-12 && kl_self == 0.0 && softmax_err <= 1e-9 && secs < 5.0;
  report(ok, "numerics oracle equivalence",
         fmt("bilinear max err %.2e (<=1e-9), KL min %.2e (>=0), KL(p,p) %.1e, softmax sum err %.2e, %.2f s",
             bilinear_err, kl_min, kl_self, softmax_err, secs));
}

// --- scene-level criteria ---------------------------------------------------

struct MethodScores {
  double fg = 0.0, bg = 0.0;
};

void empty_scene_suppression() {
  const auto t0 = Clock::now();
  const SyntheticDetector det;
  GenOptions o;
  o.seed = 1003;
  o.trees_min = o.trees_max = 0;
  o.size = 128;
  std::vector<SceneScore> crown;
  std::size_t nonzero_raw = 0, score_bg_positive = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto s = gen_scene(o, i);
    const Cam c = explain(s.image, det, PipelineConfig{}).cam;
    nonzero_raw += std::any_of(c.raw.values().begin(), c.raw.values().end(), [](float v) { return v != 0.0f; });
    crown.push_back(score_scene({"", c.normalized, s.ground_truth}, kDefaultThreshold));
    const Cam sc = score_cam(s.image, det, PipelineConfig{});
    score_bg_positive += score_scene({"", sc.normalized, s.ground_truth}, kDefaultThreshold).camiou_bg > 0.0;
  }
  const EvalReport agg = aggregate(crown, kDefaultThreshold, IouDenominator::union_area);
  const double secs = seconds_since(t0);
  const bool ok = nonzero_raw == 0 && agg.camiou_bg_pct == 0.0 && score_bg_positive >= 15 && secs < 30.0;
  report(ok, "empty-scene suppression",
         fmt("Crown-CAM nonzero CAMs %zu/20, CAMIoU_BG %.1f; Score-CAM BG>0 on %zu/20 (>=15); %.1f s", nonzero_raw,
             agg.camiou_bg_pct, score_bg_positive, secs));
}

void directional_ordering() {
  const auto t0 = Clock::now();
  const SyntheticDetector det;
  GenOptions o;
  o.seed = 1004;
  o.trees_min = 3;
  o.trees_max = 12;
  o.size = 128;
  std::vector<SceneScore> crown, score, eigen;
  for (std::size_t i = 0; i < 50; ++i) {
    const auto s = gen_scene(o, i);
    auto grade = [&](const Cam& c) { return score_scene({"", c.normalized, s.ground_truth}, kDefaultThreshold); };
    crown.push_back(grade(explain(s.image, det, PipelineConfig{}).cam));
    score.push_back(grade(score_cam(s.image, det, PipelineConfig{})));
    eigen.push_back(grade(eigen_cam(s.image, det)));
  }
  const auto c = aggregate(crown, kDefaultThreshold, IouDenominator::union_area);
  const auto sc = aggregate(score, kDefaultThreshold, IouDenominator::union_area);
  const auto e = aggregate(eigen, kDefaultThreshold, IouDenominator::union_area);
  const double secs = seconds_since(t0);
  std::printf("      CAMIoU (%%)    FG      BG\n");
  std::printf("      Crown-CAM   %6.2f  %6.2f\n", c.camiou_fg_pct, c.camiou_bg_pct);
  std::printf("      Score-CAM   %6.2f  %6.2f\n", sc.camiou_fg_pct, sc.camiou_bg_pct);
  std::printf("      Eigen-CAM   %6.2f  %6.2f\n", e.camiou_fg_pct, e.camiou_bg_pct);
  const bool fg_ok = c.camiou_fg_pct > e.camiou_fg_pct;
  const bool bg_ok = c.camiou_bg_pct < sc.camiou_bg_pct;
  report(fg_ok && bg_ok && secs < 300.0, "directional ordering (50 scenes)",
         fmt("FG Crown %.2f > Eigen %.2f: %s; BG Crown %.2f < Score %.2f: %s; %.1f s (limit 300 s)",
             c.camiou_fg_pct, e.camiou_fg_pct, fg_ok ? "yes" : "no", c.camiou_bg_pct, sc.camiou_bg_pct,
             bg_ok ? "yes" : "no", secs));
}

void channel_ablation() {
  const auto t0 = Clock::now();
  const SyntheticDetector det;
  GenOptions o;
  o.seed = 1005;
  o.trees_min = 3;
  o.trees_max = 12;
  o.size = 128;
  PipelineConfig half, full;
  full.channel_keep_fraction = 1.0;
  double diff_sum = 0.0;
  std::size_t pixels = 0, bad_counts = 0, min_half = SIZE_MAX, max_half = 0, min_full = SIZE_MAX, max_full = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto s = gen_scene(o, i);
    const CountingDetector ch(det), cf(det);
    const Cam a = explain(s.image, ch, half).cam;
    const Cam b = explain(s.image, cf, full).cam;
    for (std::size_t k = 0; k < a.normalized.size(); ++k)
      diff_sum += std::abs(static_cast<double>(a.normalized.values()[k]) - b.normalized.values()[k]);
    pixels += a.normalized.size();
    const std::size_t mh = ch.calls_without_activations(), mf = cf.calls_without_activations();
    min_half = std::min(min_half, mh);
    max_half = std::max(max_half, mh);
    min_full = std::min(min_full, mf);
    max_full = std::max(max_full, mf);
    bad_counts += !(mh == 12 && mf == 24 && 2 * mh == mf);
  }
  const double mad = diff_sum / static_cast<double>(pixels);
  report(mad <= 0.15 && bad_counts == 0, "channel-reduction ablation",
         fmt("mean |CAM_0.5 - CAM_1.0| %.4f (<=0.15); masked calls %zu-%zu vs %zu-%zu (want 12 vs 24); %.1f s", mad,
             min_half, max_half, min_full, max_full, seconds_since(t0)));
}

void determinism() {
  const auto t0 = Clock::now();
  camforge::testing::TempDir dir("accept");
  GenOptions o;
  o.seed = 1006;
  o.count = 8;
  o.trees_min = 3;
  o.trees_max = 12;
  o.size = 128;
  o.out_dir = dir.path() / "scenes";
  cmd_gen(o);
  const SyntheticDetector det;
  const auto a = cmd_explain(RunConfig{}, det, o.out_dir / "scene_0.png", dir.path() / "a");
  const auto b = cmd_explain(RunConfig{}, det, o.out_dir / "scene_0.png", dir.path() / "b");
  const bool cct_same = camforge::testing::slurp(a.cam) == camforge::testing::slurp(b.cam);

  bool reports_same = true;
  for (Method m : {Method::crowncam, Method::scorecam, Method::eigencam}) {
    RunConfig one, eight;
    one.method = eight.method = m;
    eight.jobs = 8;
    const std::string tag = to_string(m);
    cmd_evaluate(one, det, o.out_dir, dir.path() / (tag + "_1"));
    cmd_evaluate(eight, det, o.out_dir, dir.path() / (tag + "_8"));
    reports_same &= camforge::testing::slurp(dir.path() / (tag + "_1") / "report.json") ==
                    camforge::testing::slurp(dir.path() / (tag + "_8") / "report.json");
  }
  report(cct_same && reports_same, "determinism",
         fmt("cam.cct identical across runs: %s; report.json --jobs 8 == --jobs 1 (3 methods): %s; %.1f s",
             cct_same ? "yes" : "no", reports_same ? "yes" : "no", seconds_since(t0)));
}

void gaussian_checks() {
  const double corner = std::exp(-2.0 / 1.4);
  bool ok = true;
  double worst_centre = 0.0, worst_corner = 0.0;
  bool monotone = true;
  for (std::size_t w : {3u, 5u, 9u, 21u}) {
    for (std::size_t h : {3u, 7u, 15u}) {
      const Grid<double> k = gaussian_kernel(BBox{0, 0, double(w), double(h)}, 0.7);
      const std::size_t cx = w / 2, cy = h / 2;
      worst_centre = std::max(worst_centre, std::abs(k(cx, cy) - 1.0));
      for (auto [x, y] : {std::pair{0ul, 0ul}, {w - 1, 0ul}, {0ul, h - 1}, {w - 1, h - 1}})
        worst_corner = std::max(worst_corner, std::abs(k(x, y) - corner));
      for (std::size_t x = cx; x + 1 < w; ++x) monotone &= k(x + 1, cy) < k(x, cy);
      for (std::size_t x = cx; x > 0; --x) monotone &= k(x - 1, cy) < k(x, cy);
      for (std::size_t y = cy; y + 1 < h; ++y) monotone &= k(cx, y + 1) < k(cx, y);
      for (std::size_t y = cy; y > 0; --y) monotone &= k(cx, y - 1) < k(cx, y);
    }
  }
  ok = worst_centre == 0.0 && worst_corner <= 1e-9 && monotone;
  report(ok, "gaussian fit checks",
         fmt("centre |k-1| %.1e, corner |k-exp(-2/1.4)| %.1e (<=1e-9), monotone decay: %s", worst_centre,
             worst_corner, monotone ? "yes" : "no"));
}

}  // namespace

int main() {
  std::printf("camforge acceptance suite\n");
  metrics_oracle();
  numerics_oracle();
  empty_scene_suppression();
  directional_ordering();
  channel_ablation();
  determinism();
  gaussian_checks();
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
