#pragma once

// Readers and writers for the corpus manifest, ratings, feature table and
// assignment plan files.

#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "facade_affect/core/csv.hpp"
#include "facade_affect/core/error.hpp"
#include "facade_affect/core/fs.hpp"
#include "facade_affect/core/types.hpp"

namespace facade_affect {

namespace detail {

inline int parse_int_field(const csv::Row& row, std::size_t col, std::string_view field,
                           std::size_t line, std::string_view what) {
  auto v = csv::to_int(row[col]);
  if (!v || *v < std::numeric_limits<int>::min() || *v > std::numeric_limits<int>::max())
    throw ValidationError(
        fmt::format("{} row {}: field '{}' is not an integer ('{}')", what, line, field, row[col]));
  return static_cast<int>(*v);
}

inline double parse_double_field(const csv::Row& row, std::size_t col, std::string_view field,
                                 std::size_t line, std::string_view what) {
  auto v = csv::to_double(row[col]);
  if (!v) throw ValidationError(fmt::format("{} row {}: field '{}' is not a number ('{}')", what, line, field, row[col]));
  return *v;
}

inline void check_width(const csv::Row& row, std::size_t expected, std::size_t line, std::string_view what) {
  if (row.size() != expected)
    throw ValidationError(fmt::format("{} row {}: expected {} fields, got {}", what, line, expected, row.size()));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Corpus manifest

inline const std::vector<std::string_view> kCorpusColumns = {
    "stimulus_id", "image_path", "width_px", "height_px",
    "facade_mask_path", "window_mask_path", "material_mask_path"};

// Relative paths in the manifest are resolved against `base_dir`.
inline std::vector<StimulusRecord> parse_corpus(const std::string& text, const std::filesystem::path& base_dir = {}) {
  constexpr std::string_view what = "manifest";
  auto rows = csv::parse(text);
  if (rows.empty()) return {};
  csv::Header h(rows.front(), kCorpusColumns, what);

  auto resolve = [&](const std::string& p) -> std::string {
    std::filesystem::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return path.lexically_normal().string();
  };
  auto optional_path = [&](const std::string& p) -> std::optional<std::string> {
    if (p.empty()) return std::nullopt;
    return resolve(p);
  };

  std::vector<StimulusRecord> out;
  std::set<int> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    detail::check_width(row, rows.front().size(), i, what);
    StimulusRecord r;
    r.stimulus_id = detail::parse_int_field(row, h["stimulus_id"], "stimulus_id", i, what);
    r.image_path = row[h["image_path"]].empty() ? std::string{} : resolve(row[h["image_path"]]);
    r.width_px = detail::parse_int_field(row, h["width_px"], "width_px", i, what);
    r.height_px = detail::parse_int_field(row, h["height_px"], "height_px", i, what);
    r.facade_mask_path = optional_path(row[h["facade_mask_path"]]);
    r.window_mask_path = optional_path(row[h["window_mask_path"]]);
    r.material_mask_path = optional_path(row[h["material_mask_path"]]);
    if (auto errs = field_errors(r); !errs.empty())
      throw ValidationError(fmt::format("{} row {}: {}", what, i, describe(errs)));
    if (!ids.insert(r.stimulus_id).second)
      throw ValidationError(fmt::format("{} row {}: duplicate stimulus_id {}", what, i, r.stimulus_id));
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<StimulusRecord> load_corpus(const std::filesystem::path& manifest_path) {
  return parse_corpus(csv::read_file(manifest_path), manifest_path.parent_path());
}

inline std::string format_corpus(const std::vector<StimulusRecord>& records) {
  std::string out = csv::format_row({kCorpusColumns.begin(), kCorpusColumns.end()});
  for (const auto& r : records) {
    out += csv::format_row({std::to_string(r.stimulus_id), r.image_path, std::to_string(r.width_px),
                            std::to_string(r.height_px), r.facade_mask_path.value_or(""),
                            r.window_mask_path.value_or(""), r.material_mask_path.value_or("")});
  }
  return out;
}

inline void save_corpus(const std::filesystem::path& path, const std::vector<StimulusRecord>& records) {
  write_file_atomic(path, format_corpus(records));
}

// ---------------------------------------------------------------------------
// Ratings

inline const std::vector<std::string_view> kRatingColumns = {
    "participant_id", "stimulus_id",   "presentation_position", "perceived_complexity",
    "perceived_transparency", "materiality_category", "perceived_materiality",
    "sam_valence",   "sam_arousal",   "descriptors",           "timestamp"};

inline csv::Row rating_to_row(const RatingRecord& r) {
  return {r.participant_id,
          std::to_string(r.stimulus_id),
          std::to_string(r.presentation_position),
          std::to_string(r.perceived_complexity),
          std::to_string(r.perceived_transparency),
          std::string(to_string(r.materiality_category)),
          std::to_string(r.perceived_materiality),
          std::to_string(r.sam_valence),
          std::to_string(r.sam_arousal),
          detail::join(r.descriptors, "|"),
          r.timestamp};
}

inline std::string ratings_header() { return csv::format_row({kRatingColumns.begin(), kRatingColumns.end()}); }

inline std::string format_ratings(const std::vector<RatingRecord>& ratings) {
  std::string out = ratings_header();
  for (const auto& r : ratings) out += csv::format_row(rating_to_row(r));
  return out;
}

inline void save_ratings(const std::filesystem::path& path, const std::vector<RatingRecord>& ratings) {
  write_file_atomic(path, format_ratings(ratings));
}

struct RatingsOptions {
  int scale_max = 5;
  const std::vector<std::string>* lexicon = nullptr;
};

inline std::vector<RatingRecord> parse_ratings(const std::string& text, const RatingsOptions& opts) {
  constexpr std::string_view what = "ratings";
  check_scale_max(opts.scale_max);
  auto rows = csv::parse(text);
  if (rows.empty()) return {};
  csv::Header h(rows.front(), kRatingColumns, what);

  std::vector<RatingRecord> out;
  std::set<std::pair<std::string, int>> pairs;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    detail::check_width(row, rows.front().size(), i, what);
    RatingRecord r;
    r.participant_id = row[h["participant_id"]];
    r.stimulus_id = detail::parse_int_field(row, h["stimulus_id"], "stimulus_id", i, what);
    r.presentation_position = detail::parse_int_field(row, h["presentation_position"], "presentation_position", i, what);
    r.perceived_complexity = detail::parse_int_field(row, h["perceived_complexity"], "perceived_complexity", i, what);
    r.perceived_transparency =
        detail::parse_int_field(row, h["perceived_transparency"], "perceived_transparency", i, what);
    auto category = parse_material_category(row[h["materiality_category"]]);
    if (!category)
      throw ValidationError(fmt::format("{} row {}: field 'materiality_category' must be natural|artificial|mixed, got '{}'",
                                        what, i, row[h["materiality_category"]]));
    r.materiality_category = *category;
    r.perceived_materiality = detail::parse_int_field(row, h["perceived_materiality"], "perceived_materiality", i, what);
    r.sam_valence = detail::parse_int_field(row, h["sam_valence"], "sam_valence", i, what);
    r.sam_arousal = detail::parse_int_field(row, h["sam_arousal"], "sam_arousal", i, what);
    r.descriptors = detail::split(row[h["descriptors"]], '|');
    r.timestamp = row[h["timestamp"]];
    if (auto errs = field_errors(r, opts.scale_max, opts.lexicon); !errs.empty())
      throw ValidationError(fmt::format("{} row {}: {}", what, i, describe(errs)));
    if (!pairs.emplace(r.participant_id, r.stimulus_id).second)
      throw ValidationError(fmt::format("{} row {}: duplicate (participant, stimulus) pair ({}, {})", what, i,
                                        r.participant_id, r.stimulus_id));
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<RatingRecord> load_ratings(const std::filesystem::path& path, int scale_max,
                                              const std::vector<std::string>* lexicon = nullptr) {
  return parse_ratings(csv::read_file(path), {scale_max, lexicon});
}

// ---------------------------------------------------------------------------
// Feature table

inline const std::vector<std::string_view> kFeatureColumns = {
    "stimulus_id", "complexity_edge", "fractal_dimension", "fractal_dimension_norm", "transparency",
    "materiality_natural", "canny_sigma", "canny_low", "canny_high"};

inline std::string format_features(const std::vector<FeatureScores>& features) {
  using csv::format_double;
  std::string out = csv::format_row({kFeatureColumns.begin(), kFeatureColumns.end()});
  for (const auto& f : features) {
    out += csv::format_row({std::to_string(f.stimulus_id), format_double(f.complexity_edge),
                            format_double(f.fractal_dimension), format_double(f.fractal_dimension_norm),
                            format_double(f.transparency),
                            f.materiality_natural ? format_double(*f.materiality_natural) : std::string{},
                            format_double(f.canny_sigma), format_double(f.canny_low), format_double(f.canny_high)});
  }
  return out;
}

inline void save_features(const std::filesystem::path& path, const std::vector<FeatureScores>& features) {
  write_file_atomic(path, format_features(features));
}

inline std::vector<FeatureScores> parse_features(const std::string& text) {
  constexpr std::string_view what = "features";
  auto rows = csv::parse(text);
  if (rows.empty()) return {};
  csv::Header h(rows.front(), kFeatureColumns, what);
  std::vector<FeatureScores> out;
  std::set<int> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    detail::check_width(row, rows.front().size(), i, what);
    auto num = [&](std::string_view name) { return detail::parse_double_field(row, h[name], name, i, what); };
    FeatureScores f;
    f.stimulus_id = detail::parse_int_field(row, h["stimulus_id"], "stimulus_id", i, what);
    f.complexity_edge = num("complexity_edge");
    f.fractal_dimension = num("fractal_dimension");
    f.fractal_dimension_norm = num("fractal_dimension_norm");
    f.transparency = num("transparency");
    if (!row[h["materiality_natural"]].empty()) f.materiality_natural = num("materiality_natural");
    f.canny_sigma = num("canny_sigma");
    f.canny_low = num("canny_low");
    f.canny_high = num("canny_high");
    try {
      validate_feature_scores(f);
    } catch (const ValidationError& e) {
      throw ValidationError(fmt::format("{} row {}: {}", what, i, e.what()));
    }
    if (!ids.insert(f.stimulus_id).second)
      throw ValidationError(fmt::format("{} row {}: duplicate stimulus_id {}", what, i, f.stimulus_id));
    out.push_back(f);
  }
  return out;
}

inline std::vector<FeatureScores> load_features(const std::filesystem::path& path) {
  return parse_features(csv::read_file(path));
}

// ---------------------------------------------------------------------------
// Assignment plan (JSON)

inline nlohmann::ordered_json plan_to_json(const AssignmentPlan& plan) {
  nlohmann::ordered_json j;
  j["seed"] = plan.seed;
  j["block_size_k"] = plan.block_size_k;
  nlohmann::ordered_json assignments = nlohmann::ordered_json::object();
  for (const auto& a : plan.assignments) assignments[a.participant_id] = a.stimuli;
  j["assignments"] = std::move(assignments);
  return j;
}

inline AssignmentPlan plan_from_json(const nlohmann::ordered_json& j) {
  AssignmentPlan plan;
  try {
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.block_size_k = j.at("block_size_k").get<int>();
    for (const auto& [pid, list] : j.at("assignments").items())
      plan.assignments.push_back({pid, list.get<std::vector<int>>()});
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("plan: ") + e.what());
  }
  validate_plan(plan);
  return plan;
}

inline std::string format_plan(const AssignmentPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

inline void save_plan(const std::filesystem::path& path, const AssignmentPlan& plan) {
  write_file_atomic(path, format_plan(plan));
}

inline AssignmentPlan load_plan(const std::filesystem::path& path) {
  auto text = csv::read_file(path);
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("plan: " + std::string(e.what()));
  }
  return plan_from_json(j);
}

// ---------------------------------------------------------------------------
// Model fits

inline nlohmann::ordered_json to_json(const ModelFit& fit) {
  nlohmann::ordered_json j;
  j["formula_description"] = fit.formula_description;
  auto effects = nlohmann::ordered_json::array();
  for (const auto& e : fit.fixed_effects) {
    effects.push_back({{"name", e.name},
                       {"estimate", e.estimate},
                       {"std_error", e.std_error},
                       {"z_value", e.z_value},
                       {"p_value", e.p_value}});
  }
  j["fixed_effects"] = std::move(effects);
  j["variance_participant"] = fit.variance_participant;
  j["variance_residual"] = fit.variance_residual;
  j["log_restricted_likelihood"] = fit.log_restricted_likelihood;
  j["n_obs"] = fit.n_obs;
  j["n_groups"] = fit.n_groups;
  j["r_squared_marginal"] = fit.r_squared_marginal;
  j["iterations"] = fit.iterations;
  return j;
}

}  // namespace facade_affect
