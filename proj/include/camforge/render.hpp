#pragma once

#include <array>
#include <cstdint>

#include "camforge/grid.hpp"
#include "camforge/png_io.hpp"

namespace camforge {

using Colormap = std::array<std::array<std::uint8_t, 3>, 256>;

/// Fixed 256-entry blue-to-red table (jet).
const Colormap& heat_colormap();

double srgb_to_linear(double v) noexcept;
double linear_to_srgb(double v) noexcept;

/// Overlays the colormapped CAM on the image. The per-pixel blend weight is
/// `alpha * cam`, so a zero CAM reproduces the input pixels. Blending happens
/// in linear light; output is 8-bit RGBA with opaque alpha.
Pixels8 render_heatmap(const Image& image, const Grid2D& cam_normalized, double alpha = 0.5);

}  // namespace camforge
