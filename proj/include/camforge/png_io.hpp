#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "camforge/grid.hpp"

namespace camforge {

/// 8-bit RGB or RGBA pixels, row-major, interleaved.
struct Pixels8 {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 3;
  std::vector<std::uint8_t> data;
};

/// Reads any PNG libpng understands and converts it to float RGB in [0, 1].
/// Alpha is dropped.
Image read_png(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Pixels8& pixels);

/// Quantizes to 8 bits with round-to-nearest.
Pixels8 to_pixels(const Image& image);

}  // namespace camforge
