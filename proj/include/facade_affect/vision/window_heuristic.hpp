#pragma once

// Luminance-threshold window detector used when no window mask is supplied.
// Glazing in daylight facade photographs tends to read darker than the wall;
// this is a crude stand-in for a trained segmentation model and is not meant
// to reproduce one.

#include <cstddef>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/vision/raster.hpp"

namespace facade_affect::vision {

struct WindowHeuristicConfig {
  double dark_threshold = 0.35;      // luminance below this is a window candidate
  int min_component_px = 16;         // 4-connected components smaller than this are discarded
  double max_facade_coverage = 0.9;  // a result covering more of the facade is rejected
};

struct WindowEstimate {
  BinaryMask mask;
  std::vector<std::string> warnings;
};

inline WindowEstimate heuristic_window_mask(const GrayImage& img, const BinaryMask& facade,
                                            const WindowHeuristicConfig& cfg = {}) {
  require_same_shape(img, facade, "heuristic_window_mask");
  const int w = img.width(), h = img.height();
  WindowEstimate out{BinaryMask(w, h, 0), {}};

  BinaryMask candidate(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) candidate(x, y) = facade(x, y) && img(x, y) < cfg.dark_threshold;

  BinaryMask visited(w, h, 0);
  std::vector<std::pair<int, int>> stack, component;
  std::size_t kept = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!candidate(x, y) || visited(x, y)) continue;
      component.clear();
      stack.assign(1, {x, y});
      visited(x, y) = 1;
      while (!stack.empty()) {
        auto [cx, cy] = stack.back();
        stack.pop_back();
        component.emplace_back(cx, cy);
        constexpr int dx[4] = {1, -1, 0, 0};
        constexpr int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          if (candidate(nx, ny) && !visited(nx, ny)) {
            visited(nx, ny) = 1;
            stack.emplace_back(nx, ny);
          }
        }
      }
      if (static_cast<int>(component.size()) < cfg.min_component_px) continue;
      for (auto [px, py] : component) out.mask(px, py) = 1;
      kept += component.size();
    }

  const std::size_t facade_px = count_set(facade);
  if (facade_px > 0 && static_cast<double>(kept) > cfg.max_facade_coverage * static_cast<double>(facade_px)) {
    out.warnings.push_back(fmt::format("heuristic window mask rejected: covers {:.1f}% of the facade (limit {:.0f}%)",
                                       100.0 * static_cast<double>(kept) / static_cast<double>(facade_px),
                                       100.0 * cfg.max_facade_coverage));
    out.mask = BinaryMask(w, h, 0);
  }
  return out;
}

}  // namespace facade_affect::vision
