#include "camforge/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace camforge {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw std::runtime_error(msg); }
void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw std::runtime_error("cannot open " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  struct ReadGuard {
    png_structp* p;
    png_infop* i;
    ~ReadGuard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  try {
    png_init_io(png, file.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const std::size_t w = png_get_image_width(png, info);
    const std::size_t h = png_get_image_height(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes != w * 3) throw std::runtime_error("unexpected PNG row layout");
    std::vector<std::uint8_t> buf(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (std::size_t y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    std::vector<float> r(w * h), g(w * h), b(w * h);
    for (std::size_t i = 0; i < w * h; ++i) {
      r[i] = static_cast<float>(buf[3 * i] / 255.0);
      g[i] = static_cast<float>(buf[3 * i + 1] / 255.0);
      b[i] = static_cast<float>(buf[3 * i + 2] / 255.0);
    }
    return Image(Grid2D(w, h, std::move(r)), Grid2D(w, h, std::move(g)), Grid2D(w, h, std::move(b)));
  } catch (const std::exception& e) {
    throw std::runtime_error("reading " + path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const Pixels8& pixels) {
  if (pixels.channels != 3 && pixels.channels != 4) {
    throw std::invalid_argument("write_png: expected 3 or 4 channels");
  }
  if (pixels.data.size() != pixels.width * pixels.height * pixels.channels) {
    throw std::invalid_argument("write_png: pixel buffer size mismatch");
  }
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw std::runtime_error("cannot open " + path.string() + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  struct WriteGuard {
    png_structp* p;
    png_infop* i;
    ~WriteGuard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(pixels.width), static_cast<png_uint_32>(pixels.height), 8,
               pixels.channels == 4 ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = pixels.width * pixels.channels;
  for (std::size_t y = 0; y < pixels.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(pixels.data.data() + y * stride));
  }
  png_write_end(png, nullptr);
}

Pixels8 to_pixels(const Image& image) {
  Pixels8 px{image.width(), image.height(), 3, {}};
  px.data.resize(px.width * px.height * 3);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto v = image.channel(c).values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      px.data[3 * i + c] = static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0f, 1.0f) * 255.0f));
    }
  }
  return px;
}

}  // namespace camforge
