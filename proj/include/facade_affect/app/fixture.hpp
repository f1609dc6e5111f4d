#pragma once

// Synthetic facade corpus and rating sets with known generating parameters.
// Used by the test suites, the acceptance run and the make_fixture_corpus tool.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/io.hpp"
#include "facade_affect/core/random.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/vision/png_io.hpp"
#include "facade_affect/vision/raster.hpp"

namespace facade_affect::app::fixture {

struct CorpusOptions {
  int n_stimuli = 24;
  int width = 96;
  int height = 72;
  std::uint64_t seed = 0;
  bool material_masks = true;
  bool window_masks = true;
};

struct FixtureImage {
  vision::RgbImage image;
  vision::BinaryMask facade;
  vision::BinaryMask windows;
  vision::MaterialMask materials;
};

// Wall with brick courses, a window grid and a natural/artificial material split.
// Sky above the facade line is flat and outside the facade mask.
inline FixtureImage make_facade(int width, int height, std::uint64_t seed) {
  Rng rng = derive_rng(seed, 0);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  FixtureImage f{vision::RgbImage(width, height, {240, 240, 245}), vision::BinaryMask(width, height, 0),
                 vision::BinaryMask(width, height, 0), vision::MaterialMask(width, height, vision::Material::none)};
  const int sky = uni(height / 12, height / 6);
  const int split = uni(0, width);  // columns left of this are natural material
  const vision::Material natural = std::array{vision::Material::brick, vision::Material::stone, vision::Material::wood}[uni(0, 2)];
  const vision::Material artificial = uni(0, 1) ? vision::Material::tile : vision::Material::metal;
  for (int y = sky; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      f.facade(x, y) = 1;
      const bool nat = x < split;
      f.image(x, y) = nat ? vision::Rgb{176, 120, 96} : vision::Rgb{190, 190, 186};
      f.materials(x, y) = nat ? natural : artificial;
    }

  // Brick courses: more courses, more edges.
  const int courses = uni(0, 10);
  for (int c = 0; c < courses; ++c) {
    const int y = sky + 2 + c * std::max(2, (height - sky - 4) / std::max(courses, 1));
    if (y >= height - 1) break;
    for (int x = 0; x < width; ++x) f.image(x, y) = {120, 84, 70};
  }
  const int verticals = uni(0, 6);
  for (int v = 0; v < verticals; ++v) {
    const int x = 3 + uni(0, width - 6);
    for (int y = sky; y < height; ++y) f.image(x, y) = {128, 100, 84};
  }

  // Window grid.
  const int rows = uni(1, 3), cols = uni(1, 5);
  const int cell_w = width / cols, cell_h = (height - sky) / rows;
  const double fill = std::uniform_real_distribution<double>(0.3, 0.85)(rng);
  const int ww = std::max(2, static_cast<int>(cell_w * fill)), wh = std::max(2, static_cast<int>(cell_h * fill));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const int x0 = c * cell_w + (cell_w - ww) / 2, y0 = sky + r * cell_h + (cell_h - wh) / 2;
      for (int y = y0; y < y0 + wh && y < height; ++y)
        for (int x = x0; x < x0 + ww && x < width; ++x) {
          f.image(x, y) = {30, 40, 55};
          f.windows(x, y) = 1;
          f.materials(x, y) = vision::Material::glass;
        }
    }
  return f;
}

// Writes images, masks and manifest.csv under `dir`; returns the loaded manifest.
inline std::vector<StimulusRecord> write_corpus(const std::filesystem::path& dir, const CorpusOptions& opt = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  std::vector<StimulusRecord> rows;
  for (int i = 1; i <= opt.n_stimuli; ++i) {
    const auto f = make_facade(opt.width, opt.height, derive_seed(opt.seed, static_cast<std::uint64_t>(i)));
    StimulusRecord r;
    r.stimulus_id = i;
    r.width_px = opt.width;
    r.height_px = opt.height;
    r.image_path = fmt::format("images/s{:03}.png", i);
    r.facade_mask_path = fmt::format("masks/s{:03}_facade.png", i);
    vision::save_rgb(dir / r.image_path, f.image);
    vision::save_mask(dir / *r.facade_mask_path, f.facade);
    if (opt.window_masks) {
      r.window_mask_path = fmt::format("masks/s{:03}_windows.png", i);
      vision::save_mask(dir / *r.window_mask_path, f.windows);
    }
    if (opt.material_masks) {
      r.material_mask_path = fmt::format("masks/s{:03}_materials.png", i);
      vision::save_material_mask(dir / *r.material_mask_path, f.materials);
    }
    rows.push_back(r);
  }
  save_corpus(dir / "manifest.csv", rows);
  return load_corpus(dir / "manifest.csv");
}

// Ratings are generated on a latent scale, then rounded and clipped to the
// integer response scales. Slopes are per point of the perceived 1..5 rating.
struct AffectModel {
  double valence_complexity = 0.35;
  double valence_transparency = 0.15;
  double valence_materiality = -0.10;
  double arousal_complexity = 0.50;
  double arousal_transparency = 0.10;
  double arousal_materiality = -0.15;
  double participant_sd = 0.4;
  double residual_sd = 0.6;
  double percept_noise_sd = 0.6;
  double valence_shift = 0.0;  // added to every latent valence, e.g. a context effect
};

inline std::vector<RatingRecord> synthesize_ratings(const AssignmentPlan& plan, const std::vector<FeatureScores>& features,
                                                    std::uint64_t seed, int scale_max = 5, const AffectModel& m = {},
                                                    bool with_descriptors = true) {
  check_scale_max(scale_max);
  std::map<int, const FeatureScores*> by_id;
  double cmin = 1, cmax = 0, tmin = 1, tmax = 0;
  for (const auto& f : features) {
    by_id[f.stimulus_id] = &f;
    cmin = std::min(cmin, f.complexity_edge);
    cmax = std::max(cmax, f.complexity_edge);
    tmin = std::min(tmin, f.transparency);
    tmax = std::max(tmax, f.transparency);
  }
  auto unit = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.5; };
  auto clip = [](double v, int hi) { return static_cast<int>(std::clamp(std::lround(v), 1L, static_cast<long>(hi))); };
  static const std::vector<std::string> lexicon = {"calm", "lively", "inviting", "busy"};
  const double stretch = (scale_max - 1) / 4.0;

  std::vector<RatingRecord> out;
  for (std::size_t p = 0; p < plan.assignments.size(); ++p) {
    const auto& a = plan.assignments[p];
    Rng rng = derive_rng(seed, p);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double u_v = m.participant_sd * normal(rng), u_a = m.participant_sd * normal(rng);
    for (std::size_t pos = 0; pos < a.stimuli.size(); ++pos) {
      const auto it = by_id.find(a.stimuli[pos]);
      if (it == by_id.end())
        throw InputError(fmt::format("synthesize_ratings: stimulus {} has no features", a.stimuli[pos]));
      const FeatureScores& f = *it->second;
      RatingRecord r;
      r.participant_id = a.participant_id;
      r.stimulus_id = f.stimulus_id;
      r.presentation_position = static_cast<int>(pos) + 1;
      r.perceived_complexity = clip(1 + 4 * unit(f.complexity_edge, cmin, cmax) + m.percept_noise_sd * normal(rng), 5);
      r.perceived_transparency = clip(1 + 4 * unit(f.transparency, tmin, tmax) + m.percept_noise_sd * normal(rng), 5);
      const double natural = f.materiality_natural.value_or(0.5);
      r.perceived_materiality = clip(5 - 4 * natural + m.percept_noise_sd * normal(rng), 5);
      r.materiality_category = natural > 0.6   ? MaterialCategory::natural
                               : natural < 0.3 ? MaterialCategory::artificial
                                               : MaterialCategory::mixed;
      const double pc = r.perceived_complexity - 3.0, pt = r.perceived_transparency - 3.0,
                   pm = r.perceived_materiality - 3.0;
      const double v = 3 + m.valence_shift + m.valence_complexity * pc + m.valence_transparency * pt +
                       m.valence_materiality * pm + u_v + m.residual_sd * normal(rng);
      const double ar = 3 + m.arousal_complexity * pc + m.arousal_transparency * pt + m.arousal_materiality * pm + u_a +
                        m.residual_sd * normal(rng);
      r.sam_valence = clip(1 + (v - 1) * stretch, scale_max);
      r.sam_arousal = clip(1 + (ar - 1) * stretch, scale_max);
      if (with_descriptors) {
        const auto first = static_cast<std::size_t>(rng() % lexicon.size());
        r.descriptors = {lexicon[first], lexicon[(first + 1) % lexicon.size()]};
      }
      r.timestamp = fmt::format("2024-05-{:02}T{:02}:{:02}:00Z", 1 + p % 28, 9 + pos / 60, pos % 60);
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Every rater sees every listed stimulus, in a rater-specific rotation.
inline AssignmentPlan complete_plan(const std::vector<int>& stimuli, int n_raters, std::string_view prefix = "F") {
  AssignmentPlan plan;
  plan.block_size_k = static_cast<int>(stimuli.size());
  for (int r = 0; r < n_raters; ++r) {
    ParticipantAssignment a;
    a.participant_id = fmt::format("{}{:02}", prefix, r + 1);
    for (std::size_t i = 0; i < stimuli.size(); ++i) a.stimuli.push_back(stimuli[(i + static_cast<std::size_t>(r)) % stimuli.size()]);
    plan.assignments.push_back(std::move(a));
  }
  return plan;
}

}  // namespace facade_affect::app::fixture
