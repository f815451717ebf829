#pragma once

#include <cstdint>
#include <vector>

#include "camforge/detector.hpp"
#include "camforge/grid.hpp"

namespace camforge {

struct SceneOptions {
  double min_radius = 4.0;
  /// Largest radius as a fraction of min(width, height).
  double max_radius_fraction = 1.0 / 8.0;
  /// Keep blobs far enough apart that their detection footprints never touch.
  /// When a blob cannot be placed that way it falls back to any position at
  /// least one pixel from every other centroid.
  bool separate = true;
};

struct Blob {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  /// False when placement had to fall back to overlapping another blob.
  bool isolated = true;
};

struct SyntheticScene {
  Image image;
  std::vector<BBox> ground_truth;
  std::vector<Blob> blobs;
  std::uint64_t seed = 0;
};

/// Radially decaying green blobs on a textured brown/gray ground. Ground-truth
/// boxes bound each blob at its half-peak contour. Bit-identical per seed.
SyntheticScene gen_synthetic_scene(std::uint64_t seed, std::size_t n_trees, std::size_t width,
                                   std::size_t height, const SceneOptions& options = {});

/// Blob intensity profile: 1 at the centre, 0.5 at `radius`.
double blob_profile(double distance, double radius) noexcept;

/// 2G - R - B.
Grid2D excess_green(const Image& image);

inline constexpr std::size_t kSyntheticLayers = 3;
inline constexpr std::size_t kSyntheticChannels = 8;
inline constexpr std::size_t kSyntheticStrides[kSyntheticLayers] = {2, 4, 8};

/// Fixed filter bank (R, G, B, excess green, |d/dx|, |d/dy|, 3x3 and 7x7 box
/// blurs of excess green) box-downsampled to strides 2, 4 and 8.
std::vector<GridStack> synthetic_activations(const Image& image);

/// Mean of each stride x stride block; partial blocks at the border average the
/// pixels they cover.
Grid2D box_downsample(const Grid2D& g, std::size_t stride);

/// Excess-green threshold, 4-connected components, one box per component.
/// Pure and reentrant.
class SyntheticDetector final : public Detector {
 public:
  static constexpr double kExgThreshold = 0.2;
  static constexpr double kConfidenceScale = 0.6;

  DetectorOutput detect(const Image& image, bool want_activations) const override;
  std::size_t max_concurrency() const noexcept override;
  std::string name() const override { return "synthetic"; }
};

}  // namespace camforge
