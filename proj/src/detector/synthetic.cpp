#include "camforge/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace camforge {

namespace {

// std::uniform_real_distribution is implementation-defined; scenes must be
// bit-identical everywhere, so draw from the engine's raw output.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

constexpr std::size_t kTextureCell = 8;
constexpr double kCoarseAmplitude = 0.08;
constexpr double kFineAmplitude = 0.03;
constexpr double kChromaAmplitude = 0.015;

struct Rgb {
  double r, g, b;
};

// Dark soil under brighter, saturated crowns. Ground stays ExG-neutral so
// nothing outside a crown can reach the detection threshold.
constexpr Rgb kBrown{0.12, 0.10, 0.08};
constexpr Rgb kGray{0.11, 0.11, 0.10};
constexpr Rgb kCrown{0.35, 0.75, 0.30};

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Smooth luminance field from a coarse random lattice.
std::vector<double> coarse_texture(SceneRng& rng, std::size_t w, std::size_t h) {
  const std::size_t lw = w / kTextureCell + 2;
  const std::size_t lh = h / kTextureCell + 2;
  std::vector<double> lattice(lw * lh);
  for (double& v : lattice) v = rng.uniform(-kCoarseAmplitude, kCoarseAmplitude);

  std::vector<double> out(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / kTextureCell;
    const auto y0 = static_cast<std::size_t>(fy);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / kTextureCell;
      const auto x0 = static_cast<std::size_t>(fx);
      const double tx = fx - static_cast<double>(x0);
      const double a = lattice[y0 * lw + x0];
      const double b = lattice[y0 * lw + x0 + 1];
      const double c = lattice[(y0 + 1) * lw + x0];
      const double d = lattice[(y0 + 1) * lw + x0 + 1];
      out[y * w + x] = (1 - ty) * ((1 - tx) * a + tx * b) + ty * ((1 - tx) * c + tx * d);
    }
  }
  return out;
}

std::vector<Blob> place_blobs(SceneRng& rng, std::size_t n, std::size_t w, std::size_t h,
                              const SceneOptions& opt) {
  const double max_r =
      std::max(opt.min_radius, opt.max_radius_fraction * static_cast<double>(std::min(w, h)));
  std::vector<Blob> blobs;
  blobs.reserve(n);
  constexpr int kSeparatedAttempts = 400;

  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform(opt.min_radius, max_r);
    auto draw = [&] {
      return Blob{rng.uniform(r, static_cast<double>(w) - r),
                  rng.uniform(r, static_cast<double>(h) - r), r, true};
    };
    auto min_gap = [&](const Blob& c, bool separated) {
      for (const Blob& o : blobs) {
        const double d = std::hypot(c.cx - o.cx, c.cy - o.cy);
        const double need = separated ? 1.3 * (c.radius + o.radius) + 2.0 : 1.0;
        if (d < need) return false;
      }
      return true;
    };

    bool placed = false;
    if (opt.separate) {
      for (int attempt = 0; attempt < kSeparatedAttempts && !placed; ++attempt) {
        Blob c = draw();
        if (min_gap(c, true)) {
          blobs.push_back(c);
          placed = true;
        }
      }
    }
    for (int attempt = 0; !placed; ++attempt) {
      if (attempt > 100000) throw std::invalid_argument("cannot place that many trees in the scene");
      Blob c = draw();
      if (min_gap(c, false)) {
        blobs.push_back(c);
        placed = true;
      }
    }
  }
  // Isolation is symmetric: a late fallback blob can crowd an earlier one.
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    blobs[i].isolated = true;
    for (std::size_t j = 0; j < blobs.size() && blobs[i].isolated; ++j) {
      if (i == j) continue;
      const double d = std::hypot(blobs[i].cx - blobs[j].cx, blobs[i].cy - blobs[j].cy);
      blobs[i].isolated = d >= 1.3 * (blobs[i].radius + blobs[j].radius) + 2.0;
    }
  }
  return blobs;
}

Grid2D box_blur(const Grid2D& g, std::size_t radius) {
  const std::size_t w = g.width();
  const std::size_t h = g.height();
  const auto clamp_idx = [](std::ptrdiff_t i, std::size_t n) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
  };
  const auto r = static_cast<std::ptrdiff_t>(radius);
  const double norm = 1.0 / static_cast<double>(2 * radius + 1);

  std::vector<double> horiz(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        s += g(clamp_idx(static_cast<std::ptrdiff_t>(x) + k, w), y);
      }
      horiz[y * w + x] = s * norm;
    }
  }
  Grid2D out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::ptrdiff_t k = -r; k <= r; ++k) {
        s += horiz[clamp_idx(static_cast<std::ptrdiff_t>(y) + k, h) * w + x];
      }
      out(x, y) = static_cast<float>(s * norm);
    }
  }
  return out;
}

Grid2D luminance(const Image& image) {
  Grid2D out(image.width(), image.height());
  const auto r = image.channel(0).values();
  const auto g = image.channel(1).values();
  const auto b = image.channel(2).values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>((static_cast<double>(r[i]) + g[i] + b[i]) / 3.0);
  }
  return out;
}

// Central-difference magnitude with replicated borders.
Grid2D gradient_magnitude(const Grid2D& g, bool horizontal) {
  const std::size_t w = g.width();
  const std::size_t h = g.height();
  Grid2D out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double lo, hi;
      if (horizontal) {
        lo = g(x == 0 ? 0 : x - 1, y);
        hi = g(std::min(x + 1, w - 1), y);
      } else {
        lo = g(x, y == 0 ? 0 : y - 1);
        hi = g(x, std::min(y + 1, h - 1));
      }
      out(x, y) = static_cast<float>(std::abs(hi - lo) * 0.5);
    }
  }
  return out;
}

}  // namespace

double blob_profile(double distance, double radius) noexcept {
  const double q = distance / radius;
  const double q2 = q * q;
  return 1.0 / (1.0 + q2 * q2 * q2);
}

SyntheticScene gen_synthetic_scene(std::uint64_t seed, std::size_t n_trees, std::size_t width,
                                   std::size_t height, const SceneOptions& options) {
  if (width < 32 || height < 32) {
    throw std::invalid_argument("synthetic scenes must be at least 32x32");
  }
  if (!(options.min_radius > 0.0)) throw std::invalid_argument("min_radius must be positive");

  SceneRng rng(seed);
  const double mix = rng.uniform();
  const double brightness = rng.uniform(-0.05, 0.05);
  const Rgb base{kBrown.r * (1 - mix) + kGray.r * mix + brightness,
                 kBrown.g * (1 - mix) + kGray.g * mix + brightness,
                 kBrown.b * (1 - mix) + kGray.b * mix + brightness};

  const std::vector<double> coarse = coarse_texture(rng, width, height);
  const std::size_t n = width * height;
  std::vector<double> r(n), g(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double lum = coarse[i] + rng.uniform(-kFineAmplitude, kFineAmplitude);
    r[i] = base.r + lum + rng.uniform(-kChromaAmplitude, kChromaAmplitude);
    g[i] = base.g + lum + rng.uniform(-kChromaAmplitude, kChromaAmplitude);
    b[i] = base.b + lum + rng.uniform(-kChromaAmplitude, kChromaAmplitude);
  }

  std::vector<Blob> blobs = place_blobs(rng, n_trees, width, height, options);
  std::vector<double> coverage(n, 0.0);
  std::vector<Rgb> tint(n_trees);
  for (std::size_t k = 0; k < blobs.size(); ++k) {
    const double shade = rng.uniform(0.85, 1.05);
    tint[k] = {kCrown.r * shade, kCrown.g * shade, kCrown.b * shade};
  }
  std::vector<Rgb> crown(n, Rgb{0, 0, 0});
  for (std::size_t k = 0; k < blobs.size(); ++k) {
    const Blob& bl = blobs[k];
    const double reach = 5.0 * bl.radius;
    const auto x_lo = static_cast<std::size_t>(std::max(0.0, std::floor(bl.cx - reach)));
    const auto y_lo = static_cast<std::size_t>(std::max(0.0, std::floor(bl.cy - reach)));
    const auto x_hi = static_cast<std::size_t>(std::min<double>(width, std::ceil(bl.cx + reach)));
    const auto y_hi = static_cast<std::size_t>(std::min<double>(height, std::ceil(bl.cy + reach)));
    for (std::size_t y = y_lo; y < y_hi; ++y) {
      for (std::size_t x = x_lo; x < x_hi; ++x) {
        const double d = std::hypot(static_cast<double>(x) + 0.5 - bl.cx,
                                    static_cast<double>(y) + 0.5 - bl.cy);
        const double t = blob_profile(d, bl.radius);
        const std::size_t i = y * width + x;
        if (t > coverage[i]) {
          coverage[i] = t;
          crown[i] = tint[k];
        }
      }
    }
  }

  std::vector<float> rf(n), gf(n), bf(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = coverage[i];
    rf[i] = clamp01(r[i] * (1 - t) + crown[i].r * t);
    gf[i] = clamp01(g[i] * (1 - t) + crown[i].g * t);
    bf[i] = clamp01(b[i] * (1 - t) + crown[i].b * t);
  }

  SyntheticScene scene{Image(Grid2D(width, height, std::move(rf)), Grid2D(width, height, std::move(gf)),
                             Grid2D(width, height, std::move(bf))),
                       {}, blobs, seed};
  for (const Blob& bl : blobs) {
    scene.ground_truth.push_back({std::max(0.0, bl.cx - bl.radius), std::max(0.0, bl.cy - bl.radius),
                                  std::min<double>(width, bl.cx + bl.radius),
                                  std::min<double>(height, bl.cy + bl.radius)});
  }
  return scene;
}

Grid2D excess_green(const Image& image) {
  Grid2D out(image.width(), image.height());
  const auto r = image.channel(0).values();
  const auto g = image.channel(1).values();
  const auto b = image.channel(2).values();
  auto dst = out.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(2.0 * g[i] - static_cast<double>(r[i]) - b[i]);
  }
  return out;
}

Grid2D box_downsample(const Grid2D& g, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be positive");
  const std::size_t ow = (g.width() + stride - 1) / stride;
  const std::size_t oh = (g.height() + stride - 1) / stride;
  Grid2D out(ow, oh);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      double s = 0.0;
      std::size_t count = 0;
      for (std::size_t y = oy * stride; y < std::min((oy + 1) * stride, g.height()); ++y) {
        for (std::size_t x = ox * stride; x < std::min((ox + 1) * stride, g.width()); ++x) {
          s += g(x, y);
          ++count;
        }
      }
      out(ox, oy) = static_cast<float>(s / static_cast<double>(count));
    }
  }
  return out;
}

std::vector<GridStack> synthetic_activations(const Image& image) {
  const Grid2D exg = excess_green(image);
  const Grid2D lum = luminance(image);
  const std::vector<Grid2D> bank = {
      image.channel(0),
      image.channel(1),
      image.channel(2),
      exg,
      gradient_magnitude(lum, true),
      gradient_magnitude(lum, false),
      box_blur(exg, 1),
      box_blur(exg, 3),
  };

  std::vector<GridStack> layers;
  layers.reserve(kSyntheticLayers);
  for (const std::size_t stride : kSyntheticStrides) {
    GridStack stack;
    for (const Grid2D& f : bank) stack.push_back(box_downsample(f, stride));
    layers.push_back(std::move(stack));
  }
  return layers;
}

DetectorOutput SyntheticDetector::detect(const Image& image, bool want_activations) const {
  const Grid2D exg = excess_green(image);
  const std::size_t w = image.width();
  const std::size_t h = image.height();

  std::vector<std::uint32_t> label(w * h, 0);
  std::vector<std::size_t> queue;
  std::vector<Detection> found;
  std::uint32_t next = 0;
  for (std::size_t start = 0; start < w * h; ++start) {
    if (label[start] != 0 || !(exg.values()[start] > kExgThreshold)) continue;
    ++next;
    label[start] = next;
    queue.assign(1, start);
    std::size_t x_min = w, y_min = h, x_max = 0, y_max = 0;
    double exg_sum = 0.0;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t p = queue[qi];
      const std::size_t x = p % w;
      const std::size_t y = p / w;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
      exg_sum += exg.values()[p];
      auto visit = [&](std::size_t q) {
        if (label[q] == 0 && exg.values()[q] > kExgThreshold) {
          label[q] = next;
          queue.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    const double mean = exg_sum / static_cast<double>(queue.size());
    found.push_back({BBox{static_cast<double>(x_min), static_cast<double>(y_min),
                          static_cast<double>(x_max + 1), static_cast<double>(y_max + 1)},
                     std::min(1.0, mean / kConfidenceScale)});
  }

  DetectorOutput out{DetectionSet(std::move(found)), {}};
  if (want_activations) out.layer_activations = synthetic_activations(image);
  return out;
}

std::size_t SyntheticDetector::max_concurrency() const noexcept {
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace camforge
