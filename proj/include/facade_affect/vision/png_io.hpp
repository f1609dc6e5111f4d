#pragma once

// PNG loading and saving for stimuli and masks.
//
// Images: 8-bit (or 16-bit, stripped) RGB/RGBA/gray/palette, converted to RGB.
// Binary masks: any single- or multi-channel PNG; a pixel is set when its first
// channel is nonzero.
// Material masks: palette or 8-bit gray PNG whose raw index is the class:
//   0 none, 1 brick, 2 stone, 3 wood, 4 glass, 5 tile, 6 metal.

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <png.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/vision/raster.hpp"

namespace facade_affect::vision {

namespace detail {

struct RawPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  bool palette = false;
  std::vector<png_color> colormap;
  std::vector<std::uint8_t> data;  // row-major, `channels` bytes per pixel
};

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};

// Reads pixel data without palette expansion, so palette PNGs come back as
// indices with the colormap alongside. libpng reports errors by longjmp; every
// object with a destructor lives outside the setjmp frame.
inline bool read_png_raw_impl(std::FILE* fp, RawPng& out, std::string& error) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) {
    error = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    error = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "malformed PNG data";
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (bit_depth < 8) png_set_packing(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(width);
  out.height = static_cast<int>(height);
  out.channels = png_get_channels(png, info);
  out.palette = color_type == PNG_COLOR_TYPE_PALETTE;
  if (out.palette) {
    png_colorp colors = nullptr;
    int n = 0;
    if (png_get_PLTE(png, info, &colors, &n) == PNG_INFO_PLTE) out.colormap.assign(colors, colors + n);
  }
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.data.resize(rowbytes * height);
  out.channels = static_cast<int>(rowbytes / width);
  for (png_uint_32 y = 0; y < height; ++y) png_read_row(png, out.data.data() + y * rowbytes, nullptr);
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline RawPng read_png_raw(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open image: " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("not a PNG file: " + path.string());
  std::fseek(fp.get(), 0, SEEK_SET);
  RawPng raw;
  std::string error;
  if (!read_png_raw_impl(fp.get(), raw, error)) throw IoError(fmt::format("cannot decode {}: {}", path.string(), error));
  return raw;
}

}  // namespace detail

inline RgbImage load_rgb(const std::filesystem::path& path) {
  auto raw = detail::read_png_raw(path);
  RgbImage img(raw.width, raw.height);
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::uint8_t* p = raw.data.data() + i * static_cast<std::size_t>(raw.channels);
    if (raw.palette) {
      if (p[0] >= raw.colormap.size()) throw IoError("palette index out of range in " + path.string());
      const auto& c = raw.colormap[p[0]];
      px[i] = {c.red, c.green, c.blue};
    } else if (raw.channels >= 3) {
      px[i] = {p[0], p[1], p[2]};
    } else {
      px[i] = {p[0], p[0], p[0]};
    }
  }
  return img;
}

inline GrayImage load_gray(const std::filesystem::path& path) { return to_grayscale(load_rgb(path)); }

inline BinaryMask load_mask(const std::filesystem::path& path) {
  auto raw = detail::read_png_raw(path);
  BinaryMask mask(raw.width, raw.height);
  auto px = mask.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = raw.data[i * static_cast<std::size_t>(raw.channels)] != 0;
  return mask;
}

inline MaterialMask load_material_mask(const std::filesystem::path& path) {
  auto raw = detail::read_png_raw(path);
  if (raw.channels != 1)
    throw ValidationError(fmt::format("material mask {} must be single-channel (palette or gray), has {} channels",
                                      path.string(), raw.channels));
  MaterialMask mask(raw.width, raw.height);
  auto px = mask.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::uint8_t v = raw.data[i];
    if (v >= kMaterialCount)
      throw ValidationError(fmt::format("material mask {}: label {} at pixel {} is not a known class", path.string(),
                                        static_cast<int>(v), i));
    px[i] = static_cast<Material>(v);
  }
  return mask;
}

namespace detail {

inline void write_png(const std::filesystem::path& path, png_image& image, const void* buffer,
                      const void* colormap = nullptr) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer, 0, colormap)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError(fmt::format("cannot write {}: {}", path.string(), msg));
  }
}

inline png_image make_image(int width, int height, png_uint_32 format) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  return image;
}

}  // namespace detail

inline void save_rgb(const std::filesystem::path& path, const RgbImage& img) {
  auto image = detail::make_image(img.width(), img.height(), PNG_FORMAT_RGB);
  detail::write_png(path, image, img.pixels().data());
}

inline void save_gray(const std::filesystem::path& path, const GrayImage& img) {
  std::vector<std::uint8_t> bytes(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(px[i], 0.0, 1.0) * 255.0));
  auto image = detail::make_image(img.width(), img.height(), PNG_FORMAT_GRAY);
  detail::write_png(path, image, bytes.data());
}

inline void save_mask(const std::filesystem::path& path, const BinaryMask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  auto px = mask.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) bytes[i] = px[i] ? 255 : 0;
  auto image = detail::make_image(mask.width(), mask.height(), PNG_FORMAT_GRAY);
  detail::write_png(path, image, bytes.data());
}

// Display colours for the material palette; only the indices carry meaning.
inline constexpr std::array<Rgb, kMaterialCount> kMaterialPalette = {{
    {0, 0, 0}, {178, 34, 34}, {160, 160, 150}, {139, 90, 43}, {135, 206, 235}, {210, 105, 30}, {112, 128, 144}}};

inline void save_material_mask(const std::filesystem::path& path, const MaterialMask& mask) {
  std::vector<std::uint8_t> bytes(mask.size());
  auto px = mask.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) bytes[i] = static_cast<std::uint8_t>(px[i]);
  auto image = detail::make_image(mask.width(), mask.height(), PNG_FORMAT_RGB_COLORMAP);
  image.colormap_entries = kMaterialCount;
  std::array<std::uint8_t, 3 * kMaterialCount> colormap{};
  for (int i = 0; i < kMaterialCount; ++i) {
    colormap[3 * i] = kMaterialPalette[i].r;
    colormap[3 * i + 1] = kMaterialPalette[i].g;
    colormap[3 * i + 2] = kMaterialPalette[i].b;
  }
  detail::write_png(path, image, bytes.data(), colormap.data());
}

}  // namespace facade_affect::vision
