#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/vision/raster.hpp"

namespace facade_affect::vision {

struct CannyConfig {
  double gaussian_sigma = 1.4;
  // Hysteresis thresholds as fractions of the image's maximum gradient magnitude.
  double low_ratio = 0.10;
  double high_ratio = 0.30;

  void validate() const {
    if (!(gaussian_sigma > 0.0)) throw ConfigError(fmt::format("canny: sigma must be > 0, got {}", gaussian_sigma));
    if (!(low_ratio > 0.0 && low_ratio < high_ratio && high_ratio < 1.0))
      throw ConfigError(fmt::format("canny: need 0 < low < high < 1, got low={} high={}", low_ratio, high_ratio));
  }
};

namespace detail {

inline std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian blur with replicated borders.
inline GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = img.width(), h = img.height();
  GrayImage tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * img.at_clamped(x + i, y);
      tmp(x, y) = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tmp.at_clamped(x, y + i);
      out(x, y) = s;
    }
  return out;
}

struct Gradient {
  GrayImage magnitude;
  Raster<std::uint8_t> direction;  // 0: horizontal, 1: diagonal (+x,+y), 2: vertical, 3: anti-diagonal
};

inline Gradient sobel(const GrayImage& img) {
  const int w = img.width(), h = img.height();
  Gradient g{GrayImage(w, h), Raster<std::uint8_t>(w, h)};
  const double tan22 = std::tan(M_PI / 8.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto p = [&](int dx, int dy) { return img.at_clamped(x + dx, y + dy); };
      const double gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
      const double gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
      g.magnitude(x, y) = std::hypot(gx, gy);
      // Quantise the gradient direction into four sectors without atan2.
      const double ax = std::abs(gx), ay = std::abs(gy);
      std::uint8_t dir;
      if (ay <= tan22 * ax) {
        dir = 0;
      } else if (ax <= tan22 * ay) {
        dir = 2;
      } else {
        dir = (gx > 0) == (gy > 0) ? 1 : 3;
      }
      g.direction(x, y) = dir;
    }
  return g;
}

// Keeps local maxima along the gradient direction. Ties are broken
// asymmetrically so a symmetric ridge yields a one-pixel-wide edge.
inline GrayImage non_maximum_suppression(const Gradient& g) {
  static constexpr int dx[4] = {1, 1, 0, -1};
  static constexpr int dy[4] = {0, 1, 1, 1};
  const int w = g.magnitude.width(), h = g.magnitude.height();
  GrayImage out(w, h, 0.0);
  auto mag = [&](int x, int y) {
    return (x < 0 || y < 0 || x >= w || y >= h) ? 0.0 : g.magnitude(x, y);
  };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = g.magnitude(x, y);
      if (m <= 0.0) continue;
      const int d = g.direction(x, y);
      const double ahead = mag(x + dx[d], y + dy[d]);
      const double behind = mag(x - dx[d], y - dy[d]);
      if (m >= ahead && m > behind) out(x, y) = m;
    }
  return out;
}

inline BinaryMask hysteresis(const GrayImage& nms, double low, double high) {
  const int w = nms.width(), h = nms.height();
  BinaryMask edges(w, h, 0);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (nms(x, y) >= high && !edges(x, y)) {
        edges(x, y) = 1;
        stack.emplace_back(x, y);
        while (!stack.empty()) {
          auto [cx, cy] = stack.back();
          stack.pop_back();
          for (int j = -1; j <= 1; ++j)
            for (int i = -1; i <= 1; ++i) {
              const int nx = cx + i, ny = cy + j;
              if (nx < 0 || ny < 0 || nx >= w || ny >= h || edges(nx, ny)) continue;
              if (nms(nx, ny) >= low) {
                edges(nx, ny) = 1;
                stack.emplace_back(nx, ny);
              }
            }
        }
      }
  return edges;
}

}  // namespace detail

// Gaussian smoothing, Sobel gradients, non-maximum suppression, then
// double-threshold hysteresis (8-connected). Thresholds scale with the
// image's maximum gradient magnitude; an image without gradient yields an
// empty map.
inline BinaryMask canny_edges(const GrayImage& img, const CannyConfig& cfg = {}) {
  cfg.validate();
  if (img.width() < kMinImageSide || img.height() < kMinImageSide)
    throw InputError(fmt::format("canny: image {}x{} smaller than {}x{}", img.width(), img.height(), kMinImageSide,
                                 kMinImageSide));
  const auto smoothed = detail::gaussian_blur(img, cfg.gaussian_sigma);
  const auto grad = detail::sobel(smoothed);
  double max_mag = 0.0;
  for (double m : grad.magnitude.pixels()) max_mag = std::max(max_mag, m);
  if (max_mag < 1e-9) return BinaryMask(img.width(), img.height(), 0);
  const auto nms = detail::non_maximum_suppression(grad);
  return detail::hysteresis(nms, cfg.low_ratio * max_mag, cfg.high_ratio * max_mag);
}

}  // namespace facade_affect::vision
