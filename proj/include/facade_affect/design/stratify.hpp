#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/types.hpp"

namespace facade_affect::design {

enum class Tertile { low = 0, medium = 1, high = 2 };

inline std::string_view to_string(Tertile t) {
  switch (t) {
    case Tertile::low: return "low";
    case Tertile::medium: return "medium";
    case Tertile::high: return "high";
  }
  return "high";
}

struct AttributeStrata {
  std::string name;
  double cut_low = 0.0;
  double cut_high = 0.0;
  std::map<int, Tertile> labels;  // stimulus_id -> tertile

  bool nonempty(Tertile t) const {
    return std::any_of(labels.begin(), labels.end(), [t](const auto& kv) { return kv.second == t; });
  }
};

struct StratificationSpec {
  std::vector<int> stimulus_ids;  // ascending
  std::vector<AttributeStrata> attributes;
  std::vector<std::string> warnings;

  // No attributes: assignment then only balances replication.
  static StratificationSpec unstratified(std::vector<int> ids) {
    std::sort(ids.begin(), ids.end());
    return {std::move(ids), {}, {}};
  }
};

// Linear-interpolation percentile of sorted data (R type 7).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InputError("percentile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Values at or below a cut point fall in the lower tertile.
inline Tertile tertile_of(double x, double cut_low, double cut_high) {
  if (x <= cut_low) return Tertile::low;
  if (x <= cut_high) return Tertile::medium;
  return Tertile::high;
}

inline AttributeStrata stratify_attribute(std::string name, const std::vector<std::pair<int, double>>& values,
                                          std::vector<std::string>& warnings) {
  std::vector<double> sorted;
  sorted.reserve(values.size());
  for (const auto& [id, v] : values) sorted.push_back(v);
  std::sort(sorted.begin(), sorted.end());
  AttributeStrata a{std::move(name), percentile_sorted(sorted, 1.0 / 3.0), percentile_sorted(sorted, 2.0 / 3.0), {}};
  if (!(a.cut_low < a.cut_high))
    warnings.push_back(fmt::format("{}: degenerate tertile cuts ({} and {}); tied stimuli labelled low", a.name,
                                   a.cut_low, a.cut_high));
  for (const auto& [id, v] : values) a.labels[id] = tertile_of(v, a.cut_low, a.cut_high);
  return a;
}

// Tertile strata on edge complexity, transparency and natural-material ratio.
// Materiality is dropped (with a warning) unless every stimulus has it.
inline StratificationSpec stratify(const std::vector<FeatureScores>& features) {
  if (features.size() < 3)
    throw InputError(fmt::format("stratify: need at least 3 scored stimuli, got {}", features.size()));
  StratificationSpec spec;
  std::vector<std::pair<int, double>> complexity, transparency, materiality;
  bool all_materiality = true;
  for (const auto& f : features) {
    spec.stimulus_ids.push_back(f.stimulus_id);
    complexity.emplace_back(f.stimulus_id, f.complexity_edge);
    transparency.emplace_back(f.stimulus_id, f.transparency);
    if (f.materiality_natural)
      materiality.emplace_back(f.stimulus_id, *f.materiality_natural);
    else
      all_materiality = false;
  }
  std::sort(spec.stimulus_ids.begin(), spec.stimulus_ids.end());
  if (std::adjacent_find(spec.stimulus_ids.begin(), spec.stimulus_ids.end()) != spec.stimulus_ids.end())
    throw InputError("stratify: duplicate stimulus_id in feature table");

  spec.attributes.push_back(stratify_attribute("complexity", complexity, spec.warnings));
  spec.attributes.push_back(stratify_attribute("transparency", transparency, spec.warnings));
  if (all_materiality)
    spec.attributes.push_back(stratify_attribute("materiality", materiality, spec.warnings));
  else
    spec.warnings.push_back(fmt::format(
        "materiality: {} of {} stimuli lack a score; attribute not used for stratification",
        features.size() - materiality.size(), features.size()));
  return spec;
}

}  // namespace facade_affect::design
