#pragma once

#include <cstddef>
#include <optional>

#include "facade_affect/core/error.hpp"
#include "facade_affect/vision/raster.hpp"

namespace facade_affect::vision {

// Fraction of edge pixels. With a facade mask both counts are restricted to the facade.
inline double edge_density(const BinaryMask& edges, const BinaryMask* facade = nullptr) {
  if (!facade) return static_cast<double>(count_set(edges)) / static_cast<double>(edges.size());
  require_same_shape(edges, *facade, "edge_density");
  std::size_t total = 0, hits = 0;
  auto e = edges.pixels();
  auto f = facade->pixels();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f[i]) continue;
    ++total;
    if (e[i]) ++hits;
  }
  if (total == 0) throw DegenerateInputError("edge_density: facade mask is empty");
  return static_cast<double>(hits) / static_cast<double>(total);
}

struct TransparencyResult {
  double ratio = 0.0;
  // Window pixels outside the facade; they are dropped from the numerator.
  std::size_t clipped_window_pixels = 0;
};

// Window-to-wall ratio as a pixel-count ratio over the facade region.
inline TransparencyResult transparency_ratio(const BinaryMask& window, const BinaryMask& facade) {
  require_same_shape(window, facade, "transparency_ratio");
  std::size_t facade_px = 0, window_px = 0, clipped = 0;
  auto w = window.pixels();
  auto f = facade.pixels();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i]) {
      ++facade_px;
      if (w[i]) ++window_px;
    } else if (w[i]) {
      ++clipped;
    }
  }
  if (facade_px == 0) throw DegenerateInputError("transparency_ratio: facade mask is empty");
  return {static_cast<double>(window_px) / static_cast<double>(facade_px), clipped};
}

// Share of facade pixels labelled brick, stone or wood. Facade pixels labelled
// `none` stay in the denominator.
inline double natural_material_ratio(const MaterialMask& materials, const BinaryMask& facade) {
  require_same_shape(materials, facade, "natural_material_ratio");
  std::size_t facade_px = 0, natural_px = 0;
  auto m = materials.pixels();
  auto f = facade.pixels();
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f[i]) continue;
    ++facade_px;
    if (is_natural(m[i])) ++natural_px;
  }
  if (facade_px == 0) throw DegenerateInputError("natural_material_ratio: facade mask is empty");
  return static_cast<double>(natural_px) / static_cast<double>(facade_px);
}

}  // namespace facade_affect::vision
