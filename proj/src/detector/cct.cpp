#include "camforge/cct.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "camforge/error.hpp"

namespace camforge {

namespace {

constexpr char kMagic[4] = {'C', 'C', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + 4 > bytes.size()) throw FormatError("CCT1: truncated header");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  if (dims.empty()) return 0;
  std::size_t n = 1;
  for (const auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_cct(const Tensor& t) {
  if (t.values.size() != t.element_count()) {
    throw std::invalid_argument("CCT1: payload length does not match dims");
  }
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * t.dims.size() + 4 * t.values.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (const auto d : t.dims) put_u32(out, d);
  put_u32(out, kCctDtypeF32);
  for (const float v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_cct(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("CCT1: bad magic");
  }
  std::size_t pos = 4;
  const std::uint32_t ndim = get_u32(bytes, pos);
  if (ndim == 0 || ndim > 8) throw FormatError("CCT1: unsupported ndim " + std::to_string(ndim));
  Tensor t;
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    t.dims.push_back(get_u32(bytes, pos));
    count *= t.dims.back();
    if (count > bytes.size()) throw FormatError("CCT1: dims exceed the payload");
  }
  const std::uint32_t dtype = get_u32(bytes, pos);
  if (dtype != kCctDtypeF32) throw FormatError("CCT1: unsupported dtype " + std::to_string(dtype));
  if (bytes.size() - pos != count * 4) {
    throw FormatError("CCT1: payload is " + std::to_string(bytes.size() - pos) +
                      " bytes, expected " + std::to_string(count * 4));
  }
  t.values.resize(count);
  for (auto& v : t.values) v = std::bit_cast<float>(get_u32(bytes, pos));
  return t;
}

void write_cct(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_cct(t);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

Tensor read_cct(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                        std::istreambuf_iterator<char>());
  return decode_cct(bytes);
}

Tensor grid_to_tensor(const Grid2D& g) {
  return {{static_cast<std::uint32_t>(g.height()), static_cast<std::uint32_t>(g.width())},
          std::vector<float>(g.values().begin(), g.values().end())};
}

Tensor stack_to_tensor(const GridStack& s) {
  Tensor t{{static_cast<std::uint32_t>(s.channels()), static_cast<std::uint32_t>(s.height()),
            static_cast<std::uint32_t>(s.width())},
           {}};
  t.values.reserve(t.element_count());
  for (const auto& g : s) t.values.insert(t.values.end(), g.values().begin(), g.values().end());
  return t;
}

Grid2D tensor_to_grid(const Tensor& t) {
  if (t.dims.size() != 2) throw FormatError("expected a 2-D tensor");
  try {
    return Grid2D(t.dims[1], t.dims[0], t.values);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("CCT1 raster: ") + e.what());
  }
}

GridStack tensor_to_stack(const Tensor& t) {
  std::vector<std::uint32_t> dims = t.dims;
  if (dims.size() == 4 && dims[0] == 1) dims.erase(dims.begin());
  if (dims.size() != 3) throw FormatError("expected a [C,H,W] or [1,C,H,W] tensor");
  if (t.values.size() != t.element_count()) throw FormatError("tensor payload does not match its dims");
  const std::size_t channels = dims[0];
  const std::size_t h = dims[1];
  const std::size_t w = dims[2];
  const std::size_t plane = w * h;
  GridStack s;
  try {
    for (std::size_t c = 0; c < channels; ++c) {
      const auto first = t.values.begin() + static_cast<std::ptrdiff_t>(c * plane);
      s.push_back(Grid2D(w, h, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(plane))));
    }
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("CCT1 stack: ") + e.what());
  }
  return s;
}

}  // namespace camforge
