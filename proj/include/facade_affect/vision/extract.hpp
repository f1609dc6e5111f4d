#pragma once

#include <algorithm>
#include <exception>
#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/vision/box_count.hpp"
#include "facade_affect/vision/canny.hpp"
#include "facade_affect/vision/png_io.hpp"
#include "facade_affect/vision/ratios.hpp"
#include "facade_affect/vision/window_heuristic.hpp"

namespace facade_affect::vision {

struct ExtractionConfig {
  CannyConfig canny;
  BoxCountConfig box;
  WindowHeuristicConfig window_heuristic;
};

struct Extraction {
  FeatureScores scores;
  double fractal_r_squared = 0.0;
  bool window_from_heuristic = false;
  std::vector<std::string> warnings;
};

// Scores from in-memory rasters. `facade` defaults to the whole image.
inline Extraction extract_features(int stimulus_id, const GrayImage& gray, const BinaryMask* facade_in,
                                   const BinaryMask* window, const MaterialMask* materials,
                                   const ExtractionConfig& cfg = {}) {
  Extraction out;
  const BinaryMask whole(gray.width(), gray.height(), 1);
  const BinaryMask& facade = facade_in ? *facade_in : whole;
  require_same_shape(gray, facade, fmt::format("stimulus {} facade mask", stimulus_id));
  if (window) require_same_shape(gray, *window, fmt::format("stimulus {} window mask", stimulus_id));
  if (materials) require_same_shape(gray, *materials, fmt::format("stimulus {} material mask", stimulus_id));
  if (count_set(facade) == 0) throw DegenerateInputError(fmt::format("stimulus {}: facade mask is empty", stimulus_id));

  auto edges = canny_edges(gray, cfg.canny);
  // Box counting sees the same edge pixels that edge density counts.
  if (facade_in) {
    auto e = edges.pixels();
    auto f = facade.pixels();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = e[i] && f[i];
  }

  auto& s = out.scores;
  s.stimulus_id = stimulus_id;
  s.complexity_edge = edge_density(edges, &facade);
  if (count_set(edges) == 0)
    throw DegenerateInputError(fmt::format("stimulus {}: no edges detected, fractal dimension undefined", stimulus_id));
  auto fd = fractal_dimension(edges, cfg.box);
  s.fractal_dimension = fd.dimension;
  s.fractal_dimension_norm = std::clamp(fd.dimension - 1.0, 0.0, 1.0);
  out.fractal_r_squared = fd.r_squared;

  if (window) {
    auto t = transparency_ratio(*window, facade);
    s.transparency = t.ratio;
    if (t.clipped_window_pixels > 0)
      out.warnings.push_back(fmt::format("stimulus {}: {} window pixels outside the facade were clipped", stimulus_id,
                                         t.clipped_window_pixels));
  } else {
    auto est = heuristic_window_mask(gray, facade, cfg.window_heuristic);
    for (auto& w : est.warnings) out.warnings.push_back(fmt::format("stimulus {}: {}", stimulus_id, w));
    s.transparency = transparency_ratio(est.mask, facade).ratio;
    out.window_from_heuristic = true;
  }
  if (materials) s.materiality_natural = natural_material_ratio(*materials, facade);

  s.canny_sigma = cfg.canny.gaussian_sigma;
  s.canny_low = cfg.canny.low_ratio;
  s.canny_high = cfg.canny.high_ratio;
  validate_feature_scores(s);
  return out;
}

inline Extraction extract_features(const StimulusRecord& stimulus, const ExtractionConfig& cfg = {}) {
  if (auto errs = field_errors(stimulus); !errs.empty())
    throw ValidationError(fmt::format("stimulus {}: {}", stimulus.stimulus_id, describe(errs)));
  const auto gray = load_gray(stimulus.image_path);
  if (gray.width() != stimulus.width_px || gray.height() != stimulus.height_px)
    throw ValidationError(fmt::format("stimulus {}: image {} is {}x{}, manifest says {}x{}", stimulus.stimulus_id,
                                      stimulus.image_path, gray.width(), gray.height(), stimulus.width_px,
                                      stimulus.height_px));
  std::optional<BinaryMask> facade, window;
  std::optional<MaterialMask> materials;
  if (stimulus.facade_mask_path) facade = load_mask(*stimulus.facade_mask_path);
  if (stimulus.window_mask_path) window = load_mask(*stimulus.window_mask_path);
  if (stimulus.material_mask_path) materials = load_material_mask(*stimulus.material_mask_path);
  return extract_features(stimulus.stimulus_id, gray, facade ? &*facade : nullptr, window ? &*window : nullptr,
                          materials ? &*materials : nullptr, cfg);
}

// Extracts every stimulus, optionally on several threads. Results come back
// sorted by stimulus_id; the first failure (in stimulus order) is rethrown.
inline std::vector<Extraction> extract_corpus(std::vector<StimulusRecord> records, const ExtractionConfig& cfg = {},
                                              unsigned threads = 1) {
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.stimulus_id < b.stimulus_id; });
  std::vector<std::optional<Extraction>> results(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < records.size(); i += step) {
      try {
        results[i] = extract_features(records[i], cfg);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, records.size()))));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  std::vector<Extraction> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*results[i]));
  }
  return out;
}

}  // namespace facade_affect::vision
