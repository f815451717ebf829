#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "camforge/error.hpp"
#include "camforge/pipeline.hpp"
#include "camforge/synthetic.hpp"
#include "test_support.hpp"

using namespace camforge;
using camforge::testing::random_grid;
using camforge::testing::ScriptedDetector;

namespace {

// Straight-line evaluation of the selection score for channel c.
double kl_oracle(const GridStack& s, std::size_t c, double eps) {
  const std::size_t n = s[0].size();
  std::vector<double> p(n), q(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = s[c].values()[i];
    double m = 0.0;
    for (std::size_t k = 0; k < s.channels(); ++k)
      if (k != c) m += s[k].values()[i];
    q[i] = m / static_cast<double>(s.channels() - 1);
  }
  auto norm = [&](std::vector<double>& v) {
    const double lo = *std::min_element(v.begin(), v.end());
    double sum = 0.0;
    for (double& x : v) sum += (x = x - lo + eps);
    for (double& x : v) x /= sum;
  };
  norm(p);
  norm(q);
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (p[i] > 0) kl += p[i] * std::log(p[i] / q[i]);
  return kl;
}

GridStack stack_of(std::initializer_list<Grid2D> grids) {
  GridStack s;
  for (const auto& g : grids) s.push_back(g);
  return s;
}

DetectorOutput fixed(std::vector<Detection> dets) { return {DetectionSet(std::move(dets)), {}}; }

}  // namespace

TEST(KeptChannelCount, RoundsHalfUpWithFloorOfOne) {
  EXPECT_EQ(kept_channel_count(24, 0.5), 12u);
  EXPECT_EQ(kept_channel_count(5 * 256, 0.5), 640u);
  EXPECT_EQ(kept_channel_count(3, 0.5), 2u);
  EXPECT_EQ(kept_channel_count(1, 0.5), 1u);
  EXPECT_EQ(kept_channel_count(10, 0.01), 1u);
  EXPECT_EQ(kept_channel_count(24, 1.0), 24u);
}

TEST(PipelineConfig, Validates) {
  PipelineConfig c;
  EXPECT_NO_THROW(c.validate());
  c.channel_keep_fraction = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.sigma_sq = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.match_iou_min = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(SelectChannels, ScoresMatchOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    GridStack s;
    for (int c = 0; c < 6; ++c) s.push_back(random_grid(rng, 9, 7, -2, 3));
    const auto sel = select_channels(s, PipelineConfig{});
    for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(sel.kl_scores[c], kl_oracle(s, c, 1e-8), 1e-12);
    ASSERT_EQ(sel.kept_indices.size(), 3u);
    EXPECT_TRUE(std::is_sorted(sel.kept_indices.begin(), sel.kept_indices.end()));
    double min_kept = 1e300, max_dropped = -1;
    for (std::size_t c = 0; c < 6; ++c) {
      const bool kept = std::count(sel.kept_indices.begin(), sel.kept_indices.end(), c) > 0;
      (kept ? min_kept : max_dropped) = kept ? std::min(min_kept, sel.kl_scores[c]) : std::max(max_dropped, sel.kl_scores[c]);
    }
    EXPECT_GE(min_kept, max_dropped);
  }
}

TEST(SelectChannels, DuplicatedMapsScoreLowAndOnlyOneSurvives) {
  // Each copy's "others" mean contains its twin, so both copies score below the
  // independent maps. Keeping 3 of 4 forces a tie-break between the copies.
  for (std::uint64_t seed = 32; seed < 42; ++seed) {
    std::mt19937_64 rng(seed);
    const Grid2D dup = random_grid(rng, 8, 8, 0, 1);
    const GridStack s = stack_of({dup, dup, random_grid(rng, 8, 8, 0, 1), random_grid(rng, 8, 8, 0, 1)});
    const double o0 = kl_oracle(s, 0, 1e-8), o2 = kl_oracle(s, 2, 1e-8), o3 = kl_oracle(s, 3, 1e-8);
    ASSERT_LT(o0, std::min(o2, o3));

    PipelineConfig cfg;
    cfg.channel_keep_fraction = 0.75;
    const auto sel = select_channels(s, cfg);
    EXPECT_EQ(sel.kl_scores[0], sel.kl_scores[1]);
    EXPECT_LT(sel.kl_scores[0], std::min(sel.kl_scores[2], sel.kl_scores[3]));
    EXPECT_EQ(sel.kept_indices, (std::vector<std::size_t>{0, 2, 3}));  // tie goes to the lower index
    EXPECT_EQ(select_channels(s, PipelineConfig{}).kept_indices, (std::vector<std::size_t>{2, 3}));
  }
}

TEST(SelectChannels, IdenticalChannelsAndSmallStacks) {
  const Grid2D g(5, 5, std::vector<float>(25, 0.25f));
  std::mt19937_64 rng(33);
  const Grid2D r = random_grid(rng, 5, 5);
  const auto same = select_channels(stack_of({r, r, r, r}), PipelineConfig{});
  for (double k : same.kl_scores) EXPECT_EQ(k, 0.0);
  EXPECT_EQ(same.kept_indices, (std::vector<std::size_t>{0, 1}));

  const auto two = select_channels(stack_of({random_grid(rng, 6, 6), random_grid(rng, 6, 6)}), PipelineConfig{});
  ASSERT_EQ(two.kept_indices.size(), 1u);
  const std::size_t best = two.kl_scores[0] >= two.kl_scores[1] ? 0 : 1;
  EXPECT_EQ(two.kept_indices[0], best);

  const auto one = select_channels(stack_of({g}), PipelineConfig{});
  EXPECT_EQ(one.kept_indices, (std::vector<std::size_t>{0}));
}

TEST(UpsampleLayers, LayerMajorOrder) {
  GridStack l0, l1;
  l0.push_back(Grid2D(2, 2, 1.0f));
  l0.push_back(Grid2D(2, 2, 2.0f));
  l1.push_back(Grid2D(1, 1, 3.0f));
  const auto u = upsample_layers({l0, l1}, 4, 4);
  ASSERT_EQ(u.channels(), 3u);
  EXPECT_EQ(u[0](3, 3), 1.0f);
  EXPECT_EQ(u[1](0, 0), 2.0f);
  EXPECT_EQ(u[2](2, 1), 3.0f);
  EXPECT_EQ(gather_channels(u, {2, 0})[0], u[2]);
}

TEST(LocalScore, Examples) {
  const Detection a{{10, 10, 20, 20}, 0.9};
  EXPECT_DOUBLE_EQ(local_score(a, a), 1.0);
  EXPECT_NEAR(local_score(a, {{15, 15, 25, 25}, 0.6}), 25.0 / 175.0 + 0.3, 1e-12);
  EXPECT_NEAR(local_score(a, {{15, 15, 25, 25}, 0.6}), 0.442857, 1e-6);
}

TEST(GreedyMatch, OneToOneByDescendingIou) {
  const DetectionSet orig({{{0, 0, 10, 10}, 0.9}, {{20, 0, 30, 10}, 0.8}, {{50, 50, 60, 60}, 0.7}});
  const DetectionSet masked({{{1, 0, 11, 10}, 0.5}, {{0, 0, 10, 10}, 0.4}, {{21, 0, 31, 10}, 0.3}});
  const auto m = greedy_match(orig, masked, 0.1);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0], (std::pair<std::size_t, std::size_t>{0, 1}));  // exact overlap wins over the shifted box
  EXPECT_EQ(m[1], (std::pair<std::size_t, std::size_t>{1, 2}));
  EXPECT_TRUE(greedy_match(orig, DetectionSet{}, 0.1).empty());
  // IoU floor.
  const DetectionSet far({{{8, 8, 18, 18}, 0.5}});
  EXPECT_TRUE(greedy_match(DetectionSet({{{0, 0, 10, 10}, 0.5}}), far, 0.1).empty());
}

TEST(Gaussian, KernelValues) {
  const Grid<double> k = gaussian_kernel(BBox{0, 0, 9, 5}, 0.7);
  ASSERT_EQ(k.width(), 9u);
  ASSERT_EQ(k.height(), 5u);
  EXPECT_EQ(k(4, 2), 1.0);
  EXPECT_NEAR(gaussian_weight(0, 0, 0.7), 1.0, 0);
  EXPECT_NEAR(gaussian_weight(1, 1, 0.7), std::exp(-2.0 / 1.4), 1e-15);
  EXPECT_NEAR(gaussian_weight(1, 1, 0.7), 0.23965, 1e-5);
  EXPECT_NEAR(k(0, 0), std::exp(-2.0 / 1.4), 1e-15);
  EXPECT_NEAR(k(8, 4), std::exp(-2.0 / 1.4), 1e-15);
  for (std::size_t x = 4; x + 1 < 9; ++x) EXPECT_GT(k(x, 2), k(x + 1, 2));
  for (std::size_t x = 1; x <= 4; ++x) EXPECT_GT(k(x, 2), k(x - 1, 2));
  EXPECT_GT(k(4, 1), k(4, 0));
  // Fractional boxes round their extent up.
  EXPECT_EQ(gaussian_kernel(BBox{0.2, 0, 3.5, 2.1}, 0.7).width(), 4u);
  EXPECT_THROW(gaussian_kernel(BBox{0, 0, 0, 3}, 0.7), std::invalid_argument);
}

TEST(Gaussian, SplatClipsAndCombines) {
  Grid2D z(10, 10);
  splat_gaussian(z, BBox{-2, -2, 3, 3}, 2.0, 0.7, OverlapCombine::max);
  EXPECT_FLOAT_EQ(z(0, 0), 2.0f);  // patch centre lands on the image corner
  EXPECT_EQ(z(3, 3), 0.0f);
  Grid2D m(10, 10), s(10, 10);
  for (auto* g : {&m, &s}) {
    const auto mode = g == &m ? OverlapCombine::max : OverlapCombine::sum;
    splat_gaussian(*g, BBox{2, 2, 7, 7}, 1.0, 0.7, mode);
    splat_gaussian(*g, BBox{2, 2, 7, 7}, 0.5, 0.7, mode);
  }
  EXPECT_FLOAT_EQ(m(4, 4), 1.0f);
  EXPECT_FLOAT_EQ(s(4, 4), 1.5f);
}

TEST(LocalScoreMaps, ScoresAndSplatsTheMatchedMaskedBox) {
  const Image img = Image::filled(40, 40, 0.2f, 0.6f, 0.2f);
  const ScriptedDetector det([](const Image&, bool, std::size_t) {
    return fixed({{{15, 15, 25, 25}, 0.6}});
  });
  const DetectionSet original({{{10, 10, 20, 20}, 0.9}});
  const GridStack kept = stack_of({Grid2D(40, 40, 1.0f), Grid2D(40, 40, 0.5f)});
  const ChannelSelection sel{{0.0, 0.0, 0.0}, {0, 2}};
  const auto ls = local_score_maps(img, original, kept, sel, det, PipelineConfig{});
  EXPECT_EQ(det.calls(), 2u);
  ASSERT_EQ(ls.assignment.per_channel.size(), 2u);
  ASSERT_EQ(ls.assignment.per_channel[0].size(), 1u);
  EXPECT_NEAR(ls.assignment.per_channel[0][0].score, 25.0 / 175.0 + 0.3, 1e-12);
  Grid2D want(40, 40);
  splat_gaussian(want, BBox{15, 15, 25, 25}, 25.0 / 175.0 + 0.3, 0.7, OverlapCombine::max);
  EXPECT_EQ(ls.z[0], want);
  // Zero outside the masked box.
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 0; x < 40; ++x)
      if (x < 15 || x >= 25 || y < 15 || y >= 25) EXPECT_EQ(ls.z[1](x, y), 0.0f);
}

TEST(LocalScoreMaps, MasksAreValidImagesAndEmptyOriginalSkipsRuns) {
  std::mt19937_64 rng(34);
  const Image img = camforge::testing::random_image(rng, 16, 16);
  const ScriptedDetector det([](const Image& masked, bool, std::size_t) {
    for (std::size_t c = 0; c < 3; ++c)
      for (float v : masked.channel(c).values()) EXPECT_TRUE(v >= 0.0f && v <= 1.0f);
    return fixed({{{0, 0, 4, 4}, 0.5}});
  });
  const GridStack kept = stack_of({random_grid(rng, 16, 16, -5, 5), random_grid(rng, 16, 16, 2, 9)});
  const ChannelSelection sel{{0, 0}, {0, 1}};
  local_score_maps(img, DetectionSet({{{0, 0, 4, 4}, 0.9}}), kept, sel, det, PipelineConfig{});
  EXPECT_EQ(det.calls(), 2u);

  const auto none = local_score_maps(img, DetectionSet{}, kept, sel, det, PipelineConfig{});
  EXPECT_EQ(det.calls(), 2u);
  for (const auto& z : none.z)
    for (float v : z.values()) EXPECT_EQ(v, 0.0f);
  for (const auto& pc : none.assignment.per_channel) EXPECT_TRUE(pc.empty());
}

TEST(LocalScoreMaps, BackendFailureNamesTheChannel) {
  const ScriptedDetector det([](const Image&, bool, std::size_t call) -> DetectorOutput {
    if (call == 1) throw BackendIoError("bridge gone");
    return fixed({{{0, 0, 4, 4}, 0.5}});
  });
  const GridStack kept = stack_of({Grid2D(8, 8, 1.0f), Grid2D(8, 8, 1.0f)});
  try {
    local_score_maps(Image::filled(8, 8, 0, 0, 0), DetectionSet({{{0, 0, 4, 4}, 0.9}}), kept,
                     ChannelSelection{{}, {3, 17}}, det, PipelineConfig{});
    FAIL() << "expected PipelineError";
  } catch (const PipelineError& e) {
    EXPECT_NE(std::string(e.what()).find("channel 17"), std::string::npos) << e.what();
  }
}

TEST(Suppression, Examples) {
  const GridStack u = stack_of({Grid2D(4, 4, 1.0f), Grid2D(4, 4, 2.0f), Grid2D(4, 4, 3.0f)});
  const auto all = suppress_background(stack_of({Grid2D(4, 4), Grid2D(4, 4), Grid2D(4, 4)}), u);
  EXPECT_TRUE(all.z.empty());
  EXPECT_TRUE(all.activations.empty());
  EXPECT_EQ(all.suppressed, 3u);

  Grid2D one(4, 4);
  one(1, 2) = 0.5f;
  const auto r = suppress_background(stack_of({Grid2D(4, 4), one, Grid2D(4, 4)}), u);
  EXPECT_EQ(r.surviving, (std::vector<std::size_t>{1}));
  EXPECT_EQ(r.activations[0], u[1]);
  EXPECT_EQ(r.suppressed, 2u);

  Grid2D g(4, 4);
  splat_gaussian(g, BBox{0, 0, 3, 3}, 0.3, 0.7, OverlapCombine::max);
  EXPECT_EQ(suppress_background(stack_of({g}), stack_of({Grid2D(4, 4)})).surviving.size(), 1u);
  EXPECT_THROW(suppress_background(stack_of({g}), u), std::invalid_argument);
}

TEST(Assembly, Examples) {
  const PipelineConfig cfg;
  const Cam empty = assemble_cam(GridStack{}, GridStack{}, cfg, 5, 4, 7);
  EXPECT_EQ(empty.raw, Grid2D(5, 4));
  EXPECT_EQ(empty.normalized, Grid2D(5, 4));
  EXPECT_EQ(empty.suppressed_channels, 7u);

  std::mt19937_64 rng(35);
  const Grid2D u0 = random_grid(rng, 5, 4, -1, 1), u1 = random_grid(rng, 5, 4, -1, 1);
  const Grid2D z = random_grid(rng, 5, 4, 0, 2);
  const Cam single = assemble_cam(stack_of({z}), stack_of({u0}), cfg, 5, 4);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_EQ(single.raw.values()[i], std::max(0.0f, u0.values()[i]));

  const Cam pair = assemble_cam(stack_of({z, z}), stack_of({u0, u1}), cfg, 5, 4);
  for (std::size_t i = 0; i < 20; ++i)
    EXPECT_NEAR(pair.raw.values()[i], std::max(0.0, 0.5 * u0.values()[i] + 0.5 * u1.values()[i]), 1e-7);
  EXPECT_EQ(pair.normalized, minmax_normalize(pair.raw));

  EXPECT_THROW(assemble_cam(stack_of({z}), stack_of({u0, u1}), cfg, 5, 4), std::invalid_argument);
}

TEST(Assembly, GlobalSumUsesChannelScalars) {
  PipelineConfig cfg;
  cfg.score_reduction = ScoreReduction::global_sum;
  Grid2D za(3, 1), zb(3, 1);
  za(0, 0) = 1.0f;
  zb(2, 0) = 2.0f;
  const Grid2D ua(3, 1, std::vector<float>{1, 2, 3}), ub(3, 1, std::vector<float>{3, 0, -9});
  const Cam c = assemble_cam(stack_of({za, zb}), stack_of({ua, ub}), cfg, 3, 1);
  const double wa = 1.0 / (1.0 + std::exp(1.0)), wb = 1.0 - wa;
  EXPECT_NEAR(c.raw(0, 0), wa * 1 + wb * 3, 1e-6);
  EXPECT_NEAR(c.raw(1, 0), wa * 2, 1e-6);
  EXPECT_EQ(c.raw(2, 0), 0.0f);
}

TEST(Explain, EmptySceneIsExactlyZero) {
  const SyntheticDetector det;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = gen_synthetic_scene(seed, 0, 64, 64);
    const CountingDetector counting(det);
    const auto e = explain(s.image, counting, PipelineConfig{});
    EXPECT_EQ(e.cam.raw, Grid2D(64, 64));
    EXPECT_EQ(e.cam.suppressed_channels, 12u);
    EXPECT_EQ(e.masked_runs, 0u);
    EXPECT_EQ(counting.calls(), 1u);
  }
}

TEST(Explain, SingleBlobPeakInsideTheBox) {
  const SyntheticDetector det;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = gen_synthetic_scene(seed, 1, 64, 64);
    const auto e = explain(s.image, det, PipelineConfig{});
    const auto v = e.cam.normalized.values();
    const std::size_t i = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    EXPECT_TRUE(s.ground_truth[0].contains(i % 64 + 0.5, i / 64 + 0.5)) << "seed " << seed;
  }
}

TEST(Explain, DeterministicAndParallelEquivalent) {
  const SyntheticDetector det;
  const auto s = gen_synthetic_scene(77, 6, 96, 96);
  const auto a = explain(s.image, det, PipelineConfig{});
  const auto b = explain(s.image, det, PipelineConfig{});
  const auto c = explain(s.image, det, PipelineConfig{}, ExecOptions{8});
  EXPECT_EQ(a.cam.raw, b.cam.raw);
  EXPECT_EQ(a.cam.raw, c.cam.raw);
  EXPECT_EQ(a.selection.kept_indices, c.selection.kept_indices);
  EXPECT_EQ(a.masked_runs, 12u);
  for (float v : a.cam.raw.values()) EXPECT_GE(v, 0.0f);
  for (const auto& pc : a.scores.per_channel)
    for (const auto& m : pc) EXPECT_GE(m.score, 0.0);
}

TEST(Explain, SuppressedChannelsHaveNoInfluence) {
  // Every third masked run finds nothing, so those channels are suppressed.
  // The CAM must equal an assembly that never saw them.
  const SyntheticDetector real;
  const ScriptedDetector det([&](const Image& image, bool want, std::size_t call) {
    if (call > 0 && call % 3 == 0) return DetectorOutput{};
    return real.detect(image, want);
  });
  const auto s = gen_synthetic_scene(3, 4, 64, 64);
  const Explanation e = explain(s.image, det, PipelineConfig{});

  const DetectorOutput base = real.detect(s.image, true);
  const GridStack up = upsample_layers(base.layer_activations, 64, 64);
  const auto sel = select_channels(up, PipelineConfig{});
  const GridStack kept = gather_channels(up, sel.kept_indices);
  const auto ls = local_score_maps(s.image, base.detections, kept, sel, real, PipelineConfig{});
  GridStack z_manual, u_manual;
  std::size_t dropped = 0;
  for (std::size_t c = 0; c < kept.channels(); ++c) {
    if ((c + 1) % 3 == 0 || ls.assignment.per_channel[c].empty()) {
      ++dropped;
      continue;
    }
    z_manual.push_back(ls.z[c]);
    u_manual.push_back(kept[c]);
  }
  EXPECT_EQ(dropped, 4u);
  EXPECT_EQ(e.cam.suppressed_channels, 4u);
  EXPECT_EQ(e.cam.raw, assemble_cam(z_manual, u_manual, PipelineConfig{}, 64, 64).raw);
  EXPECT_NE(e.cam.raw, explain(s.image, real, PipelineConfig{}).cam.raw);
}
