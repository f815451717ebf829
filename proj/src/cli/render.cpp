#include "camforge/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace camforge {

namespace {

Colormap build_jet() {
  Colormap table{};
  for (std::size_t i = 0; i < 256; ++i) {
    const double t = static_cast<double>(i) / 255.0;
    const auto channel = [t](double centre) {
      const double v = std::clamp(1.5 - std::abs(4.0 * t - centre), 0.0, 1.0);
      return static_cast<std::uint8_t>(std::lround(v * 255.0));
    };
    table[i] = {channel(3.0), channel(2.0), channel(1.0)};
  }
  return table;
}

}  // namespace

const Colormap& heat_colormap() {
  static const Colormap table = build_jet();
  return table;
}

double srgb_to_linear(double v) noexcept {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) noexcept {
  return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

Pixels8 render_heatmap(const Image& image, const Grid2D& cam_normalized, double alpha) {
  if (cam_normalized.width() != image.width() || cam_normalized.height() != image.height()) {
    throw std::invalid_argument("render_heatmap: CAM and image dimensions differ");
  }
  const Colormap& cmap = heat_colormap();
  Pixels8 out{image.width(), image.height(), 4, {}};
  out.data.resize(out.width * out.height * 4);
  const auto cam = cam_normalized.values();
  for (std::size_t i = 0; i < cam.size(); ++i) {
    const double value = std::clamp(static_cast<double>(cam[i]), 0.0, 1.0);
    const auto& color = cmap[static_cast<std::size_t>(std::lround(value * 255.0))];
    const double weight = alpha * value;
    for (std::size_t c = 0; c < 3; ++c) {
      const double base = srgb_to_linear(std::clamp(static_cast<double>(image.channel(c).values()[i]), 0.0, 1.0));
      const double over = srgb_to_linear(color[c] / 255.0);
      const double mixed = linear_to_srgb((1.0 - weight) * base + weight * over);
      out.data[4 * i + c] = static_cast<std::uint8_t>(std::lround(std::clamp(mixed, 0.0, 1.0) * 255.0));
    }
    out.data[4 * i + 3] = 255;
  }
  return out;
}

}  // namespace camforge
