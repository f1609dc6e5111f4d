#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"

namespace facade_affect {

// Box counting needs at least a few scales; anything smaller is rejected at load time.
inline constexpr int kMinImageSide = 16;

struct StimulusRecord {
  int stimulus_id = 0;
  std::string image_path;
  int width_px = 0;
  int height_px = 0;
  std::optional<std::string> facade_mask_path;
  std::optional<std::string> window_mask_path;
  std::optional<std::string> material_mask_path;

  friend bool operator==(const StimulusRecord&, const StimulusRecord&) = default;
};

// Machine-derived scores for one stimulus plus the Canny settings that produced them.
struct FeatureScores {
  int stimulus_id = 0;
  double complexity_edge = 0.0;
  double fractal_dimension = 0.0;
  double fractal_dimension_norm = 0.0;
  double transparency = 0.0;
  std::optional<double> materiality_natural;  // absent when no material mask was supplied
  double canny_sigma = 0.0;
  double canny_low = 0.0;
  double canny_high = 0.0;

  friend bool operator==(const FeatureScores&, const FeatureScores&) = default;
};

enum class Condition { online, field };

inline std::string_view to_string(Condition c) { return c == Condition::online ? "online" : "field"; }

inline std::optional<Condition> parse_condition(std::string_view s) {
  if (s == "online") return Condition::online;
  if (s == "field") return Condition::field;
  return std::nullopt;
}

struct ParticipantRecord {
  std::string participant_id;
  std::map<std::string, std::string> demographics;
  Condition condition = Condition::online;

  friend bool operator==(const ParticipantRecord&, const ParticipantRecord&) = default;
};

enum class MaterialCategory { natural, artificial, mixed };

inline std::string_view to_string(MaterialCategory c) {
  switch (c) {
    case MaterialCategory::natural: return "natural";
    case MaterialCategory::artificial: return "artificial";
    case MaterialCategory::mixed: return "mixed";
  }
  return "mixed";
}

inline std::optional<MaterialCategory> parse_material_category(std::string_view s) {
  if (s == "natural") return MaterialCategory::natural;
  if (s == "artificial") return MaterialCategory::artificial;
  if (s == "mixed") return MaterialCategory::mixed;
  return std::nullopt;
}

// Perceived attributes are always 1..5. SAM valence/arousal use the configured
// breadth, 5 or 9.
inline constexpr int kPerceptScaleMax = 5;

struct RatingRecord {
  std::string participant_id;
  int stimulus_id = 0;
  int presentation_position = 0;
  int perceived_complexity = 0;
  int perceived_transparency = 0;
  MaterialCategory materiality_category = MaterialCategory::mixed;
  int perceived_materiality = 0;  // artificiality, 1 = fully natural .. 5 = fully artificial
  int sam_valence = 0;
  int sam_arousal = 0;
  std::vector<std::string> descriptors;
  std::string timestamp;  // ISO-8601 UTC, provenance only

  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct ParticipantAssignment {
  std::string participant_id;
  std::vector<int> stimuli;  // presentation order

  friend bool operator==(const ParticipantAssignment&, const ParticipantAssignment&) = default;
};

struct AssignmentPlan {
  std::uint64_t seed = 0;
  int block_size_k = 15;
  std::vector<ParticipantAssignment> assignments;

  const ParticipantAssignment* find(std::string_view pid) const {
    for (const auto& a : assignments)
      if (a.participant_id == pid) return &a;
    return nullptr;
  }

  std::size_t total_assignments() const {
    std::size_t n = 0;
    for (const auto& a : assignments) n += a.stimuli.size();
    return n;
  }

  friend bool operator==(const AssignmentPlan&, const AssignmentPlan&) = default;
};

struct FixedEffect {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double z_value = 0.0;
  double p_value = 1.0;
};

struct ModelFit {
  std::string formula_description;
  std::vector<FixedEffect> fixed_effects;
  double variance_participant = 0.0;
  double variance_residual = 0.0;
  double log_restricted_likelihood = 0.0;
  int n_obs = 0;
  int n_groups = 0;
  double r_squared_marginal = 0.0;
  int iterations = 0;

  const FixedEffect& effect(std::string_view name) const {
    for (const auto& e : fixed_effects)
      if (e.name == name) return e;
    throw InputError(fmt::format("model has no term '{}'", name));
  }
};

// ---------------------------------------------------------------------------
// Validation

struct FieldError {
  std::string field;
  std::string message;
};

inline bool is_valid_participant_id(std::string_view pid) {
  if (pid.empty() || pid.size() > 64) return false;
  for (char c : pid) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

inline bool is_valid_timestamp(std::string_view ts) {
  static const std::regex pattern(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d{1,9})?Z)");
  return std::regex_match(ts.begin(), ts.end(), pattern);
}

inline bool is_valid_descriptor(std::string_view token) {
  if (token.empty()) return false;
  for (char c : token)
    if (c == '|' || c == ',' || c == '\n' || c == '\r' || c == '"') return false;
  return true;
}

inline void check_scale_max(int scale_max) {
  if (scale_max != 5 && scale_max != 9)
    throw ConfigError(fmt::format("scale_max must be 5 or 9, got {}", scale_max));
}

inline std::vector<FieldError> field_errors(const StimulusRecord& r) {
  std::vector<FieldError> errs;
  if (r.stimulus_id <= 0) errs.push_back({"stimulus_id", "must be a positive integer"});
  if (r.image_path.empty()) errs.push_back({"image_path", "must not be empty"});
  if (r.width_px < kMinImageSide)
    errs.push_back({"width_px", fmt::format("must be >= {}", kMinImageSide)});
  if (r.height_px < kMinImageSide)
    errs.push_back({"height_px", fmt::format("must be >= {}", kMinImageSide)});
  return errs;
}

// Validates one rating against the configured SAM breadth and, when given, a
// descriptor lexicon. `allow_no_descriptors` admits the field condition's empty list.
inline std::vector<FieldError> field_errors(const RatingRecord& r, int scale_max,
                                            const std::vector<std::string>* lexicon = nullptr,
                                            bool allow_no_descriptors = true) {
  std::vector<FieldError> errs;
  auto in_range = [&](std::string_view field, int v, int hi) {
    if (v < 1 || v > hi) errs.push_back({std::string(field), fmt::format("{} outside 1..{}", v, hi)});
  };
  if (!is_valid_participant_id(r.participant_id))
    errs.push_back({"participant_id", "must be 1-64 characters of [A-Za-z0-9_-]"});
  if (r.stimulus_id <= 0) errs.push_back({"stimulus_id", "must be a positive integer"});
  if (r.presentation_position < 1) errs.push_back({"presentation_position", "must be >= 1"});
  in_range("perceived_complexity", r.perceived_complexity, kPerceptScaleMax);
  in_range("perceived_transparency", r.perceived_transparency, kPerceptScaleMax);
  in_range("perceived_materiality", r.perceived_materiality, kPerceptScaleMax);
  in_range("sam_valence", r.sam_valence, scale_max);
  in_range("sam_arousal", r.sam_arousal, scale_max);

  const auto nd = r.descriptors.size();
  if (!(nd == 2 || nd == 3 || (nd == 0 && allow_no_descriptors)))
    errs.push_back({"descriptors", fmt::format("expected 2 or 3 descriptors, got {}", nd)});
  std::set<std::string_view> seen;
  for (const auto& d : r.descriptors) {
    if (!is_valid_descriptor(d)) {
      errs.push_back({"descriptors", fmt::format("invalid descriptor token '{}'", d)});
    } else if (!seen.insert(d).second) {
      errs.push_back({"descriptors", fmt::format("duplicate descriptor '{}'", d)});
    } else if (lexicon && std::find(lexicon->begin(), lexicon->end(), d) == lexicon->end()) {
      errs.push_back({"descriptors", fmt::format("'{}' is not in the lexicon", d)});
    }
  }
  if (!is_valid_timestamp(r.timestamp))
    errs.push_back({"timestamp", "must be ISO-8601 UTC (YYYY-MM-DDThh:mm:ssZ)"});
  return errs;
}

inline std::string describe(const std::vector<FieldError>& errs) {
  std::string out;
  for (const auto& e : errs) {
    if (!out.empty()) out += "; ";
    out += e.field + ": " + e.message;
  }
  return out;
}

inline void validate_feature_scores(const FeatureScores& f) {
  auto unit = [&](std::string_view name, double v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ValidationError(fmt::format("stimulus {}: {} = {} outside [0,1]", f.stimulus_id, name, v));
  };
  if (f.stimulus_id <= 0) throw ValidationError("feature row: stimulus_id must be positive");
  unit("complexity_edge", f.complexity_edge);
  unit("fractal_dimension_norm", f.fractal_dimension_norm);
  unit("transparency", f.transparency);
  if (f.materiality_natural) unit("materiality_natural", *f.materiality_natural);
  if (!(f.fractal_dimension >= 0.9 && f.fractal_dimension <= 2.1))
    throw ValidationError(fmt::format("stimulus {}: fractal_dimension = {} outside [0.9, 2.1]",
                                      f.stimulus_id, f.fractal_dimension));
}

inline void validate_participants(const std::vector<ParticipantRecord>& participants) {
  std::set<std::string_view> ids;
  for (const auto& p : participants) {
    if (!is_valid_participant_id(p.participant_id))
      throw ValidationError(fmt::format("invalid participant_id '{}'", p.participant_id));
    if (!ids.insert(p.participant_id).second)
      throw ValidationError(fmt::format("duplicate participant_id '{}'", p.participant_id));
  }
}

// Checks the plan's own invariants: exact block sizes and distinct stimuli per block.
inline void validate_plan(const AssignmentPlan& plan) {
  if (plan.block_size_k < 1) throw ValidationError("plan: block_size_k must be >= 1");
  std::set<std::string_view> pids;
  for (const auto& a : plan.assignments) {
    if (!is_valid_participant_id(a.participant_id))
      throw ValidationError(fmt::format("plan: invalid participant id '{}'", a.participant_id));
    if (!pids.insert(a.participant_id).second)
      throw ValidationError(fmt::format("plan: duplicate participant '{}'", a.participant_id));
    if (static_cast<int>(a.stimuli.size()) != plan.block_size_k)
      throw ValidationError(fmt::format("plan: participant '{}' has {} stimuli, expected {}",
                                        a.participant_id, a.stimuli.size(), plan.block_size_k));
    std::set<int> sids(a.stimuli.begin(), a.stimuli.end());
    if (sids.size() != a.stimuli.size())
      throw ValidationError(fmt::format("plan: participant '{}' has repeated stimuli", a.participant_id));
  }
}

}  // namespace facade_affect
