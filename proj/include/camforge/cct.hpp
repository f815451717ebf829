#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "camforge/grid.hpp"

namespace camforge {

/// In-memory form of a CCT1 tensor-exchange file.
///
/// Layout (all integers little-endian u32):
///   bytes 0-3   magic "CCT1"
///   ndim
///   ndim dims, outermost first
///   dtype code (1 = f32 little-endian)
///   row-major payload
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const noexcept;
  bool operator==(const Tensor&) const = default;
};

inline constexpr std::uint32_t kCctDtypeF32 = 1;

std::vector<std::uint8_t> encode_cct(const Tensor& t);
Tensor decode_cct(std::span<const std::uint8_t> bytes);

void write_cct(const std::filesystem::path& path, const Tensor& t);
Tensor read_cct(const std::filesystem::path& path);

/// [height, width]
Tensor grid_to_tensor(const Grid2D& g);
/// [channels, height, width]
Tensor stack_to_tensor(const GridStack& s);

Grid2D tensor_to_grid(const Tensor& t);
/// Accepts [C, H, W] or [1, C, H, W].
GridStack tensor_to_stack(const Tensor& t);

}  // namespace camforge
