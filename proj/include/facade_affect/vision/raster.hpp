#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"

namespace facade_affect::vision {

// Row-major 2-D raster.
template <class T>
class Raster {
public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
    if (width <= 0 || height <= 0)
      throw InputError(fmt::format("raster dimensions must be positive, got {}x{}", width, height));
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }
  Raster(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
    if (width <= 0 || height <= 0)
      throw InputError(fmt::format("raster dimensions must be positive, got {}x{}", width, height));
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
      throw InputError(fmt::format("raster has {} values, expected {}x{}", data_.size(), width, height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  // Clamped access (replicated border).
  const T& at_clamped(int x, int y) const noexcept {
    return (*this)(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::span<T> pixels() noexcept { return data_; }
  std::span<const T> pixels() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Raster<Rgb>;
using GrayImage = Raster<double>;     // luminance in [0,1]
using BinaryMask = Raster<std::uint8_t>;  // 0 = unset, 1 = set

enum class Material : std::uint8_t { none = 0, brick = 1, stone = 2, wood = 3, glass = 4, tile = 5, metal = 6 };
inline constexpr int kMaterialCount = 7;

inline constexpr bool is_natural(Material m) noexcept {
  return m == Material::brick || m == Material::stone || m == Material::wood;
}

inline std::string_view to_string(Material m) {
  static constexpr std::array<std::string_view, kMaterialCount> names = {"none",  "brick", "stone", "wood",
                                                                         "glass", "tile",  "metal"};
  return names[static_cast<std::size_t>(m)];
}

using MaterialMask = Raster<Material>;

inline std::size_t count_set(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.pixels().begin(), mask.pixels().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

inline void require_same_shape(const auto& a, const auto& b, std::string_view what) {
  if (!a.same_shape(b))
    throw ValidationError(fmt::format("{}: dimension mismatch {}x{} vs {}x{}", what, a.width(), a.height(),
                                      b.width(), b.height()));
}

// ITU-R BT.601 luma weights.
inline GrayImage to_grayscale(const RgbImage& image) {
  if (image.empty()) throw InputError("to_grayscale: empty raster");
  GrayImage out(image.width(), image.height());
  auto src = image.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = 0.299 * src[i].r + 0.587 * src[i].g + 0.114 * src[i].b;
    dst[i] = std::clamp(v / 255.0, 0.0, 1.0);
  }
  return out;
}

}  // namespace facade_affect::vision
