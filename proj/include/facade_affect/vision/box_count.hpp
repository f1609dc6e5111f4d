#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/vision/raster.hpp"

namespace facade_affect::vision {

struct BoxCountConfig {
  // Box side lengths in pixels, strictly decreasing, each >= 2. Empty selects
  // powers of two from min(width, height)/2 down to 2.
  std::vector<int> scales;
  int min_scales = 4;
};

struct FractalFit {
  double dimension = 0.0;
  double r_squared = 0.0;
  std::vector<int> scales;
  std::vector<std::size_t> box_counts;
};

inline std::vector<int> default_box_scales(int width, int height) {
  std::vector<int> scales;
  const int limit = std::min(width, height) / 2;
  int s = 1;
  while (s * 2 <= limit) s *= 2;
  for (; s >= 2; s /= 2) scales.push_back(s);
  return scales;
}

// Occupied boxes of side `eps` on a grid anchored at the image origin.
// Partial boxes along the right and bottom borders count like full ones.
inline std::size_t count_boxes(const BinaryMask& mask, int eps) {
  const int bw = (mask.width() + eps - 1) / eps;
  const int bh = (mask.height() + eps - 1) / eps;
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(bw) * bh, 0);
  std::size_t count = 0;
  for (int y = 0; y < mask.height(); ++y) {
    const std::size_t row = static_cast<std::size_t>(y / eps) * bw;
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      auto& cell = occupied[row + x / eps];
      if (!cell) {
        cell = 1;
        ++count;
      }
    }
  }
  return count;
}

// Box-counting dimension: least-squares slope of log N(eps) against
// log(1/eps). Also reports the fit's R^2 as a quality diagnostic.
inline FractalFit fractal_dimension(const BinaryMask& edges, const BoxCountConfig& cfg = {}) {
  if (count_set(edges) == 0) throw DegenerateInputError("fractal_dimension: mask has no set pixels");
  if (cfg.min_scales < 3) throw ConfigError(fmt::format("fractal_dimension: min_scales must be >= 3, got {}", cfg.min_scales));

  FractalFit fit;
  fit.scales = cfg.scales.empty() ? default_box_scales(edges.width(), edges.height()) : cfg.scales;
  for (std::size_t i = 0; i < fit.scales.size(); ++i) {
    if (fit.scales[i] < 2) throw ConfigError(fmt::format("fractal_dimension: scale {} is below 2", fit.scales[i]));
    if (i > 0 && fit.scales[i] >= fit.scales[i - 1])
      throw ConfigError("fractal_dimension: scales must be strictly decreasing");
  }
  if (static_cast<int>(fit.scales.size()) < cfg.min_scales)
    throw ConfigError(fmt::format("fractal_dimension: {} usable scales for a {}x{} mask, need at least {}",
                                  fit.scales.size(), edges.width(), edges.height(), cfg.min_scales));

  const std::size_t n = fit.scales.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    fit.box_counts.push_back(count_boxes(edges, fit.scales[i]));
    xs[i] = -std::log(static_cast<double>(fit.scales[i]));
    ys[i] = std::log(static_cast<double>(fit.box_counts[i]));
  }

  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  fit.dimension = sxy / sxx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  return fit;
}

}  // namespace facade_affect::vision
