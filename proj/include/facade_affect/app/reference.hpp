#pragma once

// Published values for the 86-facade reference corpus, used only to print a
// side-by-side comparison when that corpus is analysed. Nothing asserts on them.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "facade_affect/app/common.hpp"

namespace facade_affect::app {

struct ReferenceValue {
  std::string key;          // matches a key the analysis fills in
  std::string quantity;     // human-readable
  std::string granularity;  // observation, image_mean, cross_context, ...
  double value;
};

inline const std::vector<ReferenceValue>& analyze_references() {
  static const std::vector<ReferenceValue> v = {
      {"lme.sam_arousal.perceived_complexity", "beta complexity -> arousal", "observation", 0.507},
      {"lme.sam_valence.perceived_complexity", "beta complexity -> valence", "observation", 0.376},
      {"lme.sam_valence.perceived_transparency", "beta transparency -> valence", "observation", 0.175},
      {"lme.sam_arousal.perceived_transparency", "beta transparency -> arousal", "observation", 0.162},
      {"ols.sam_valence.perceived_transparency", "beta transparency -> valence", "image_mean", 0.161},
      {"ols.sam_arousal.perceived_transparency", "beta transparency -> arousal", "image_mean", 0.088},
      {"lme.sam_arousal.perceived_materiality", "beta materiality -> arousal", "observation", -0.126},
      {"lme.sam_valence.perceived_materiality", "beta materiality -> valence", "observation", -0.072},
      {"lme.sam_arousal.interaction", "beta complexity:transparency:materiality -> arousal", "observation", 0.126},
      {"spearman.materiality_natural.sam_valence", "rho machine materiality ~ mean valence", "image_mean", 0.22},
      {"r2.sam_valence", "R^2 machine features -> mean valence", "image_mean", 0.024},
      {"r2.sam_arousal", "R^2 machine features -> mean arousal", "image_mean", 0.002},
      {"mediation.materiality.sam_valence", "indirect effect machine materiality -> valence", "image_mean", -0.205},
      {"mediation_p.materiality.sam_valence", "indirect effect p", "image_mean", 0.003},
  };
  return v;
}

inline const std::vector<ReferenceValue>& validate_references() {
  static const std::vector<ReferenceValue> v = {
      {"agreement.spearman.materiality", "rho machine ~ human materiality", "image_mean", 0.431},
      {"agreement.pearson.materiality", "r machine ~ human materiality", "image_mean", 0.441},
      {"agreement.spearman.transparency", "rho machine ~ human transparency", "image_mean", 0.256},
      {"agreement.spearman.complexity", "rho machine ~ human complexity", "image_mean", 0.127},
      {"icc.perceived_materiality", "ICC(2,1) materiality online vs field", "cross_context", 0.677},
      {"icc.perceived_complexity", "ICC(2,1) complexity online vs field", "cross_context", 0.556},
      {"icc.sam_valence", "ICC(2,1) valence online vs field", "cross_context", 0.332},
      {"icc.sam_arousal", "ICC(2,1) arousal online vs field", "cross_context", 0.364},
      {"paired_p.sam_valence", "paired t p valence", "cross_context", 0.024},
      {"paired_p.sam_arousal", "paired t p arousal", "cross_context", 0.183},
      {"spearman.sam_valence", "rho online ~ field valence", "cross_context", 0.58},
      {"spearman.sam_arousal", "rho online ~ field arousal", "cross_context", 0.41},
  };
  return v;
}

inline std::string reference_table(const std::vector<ReferenceValue>& refs, const std::map<std::string, double>& computed) {
  Table t({"quantity", "granularity", "reference_value", "computed_value", "abs_difference"});
  for (const auto& r : refs) {
    auto it = computed.find(r.key);
    const double c = it == computed.end() ? NAN : it->second;
    t.row({r.quantity, r.granularity, num(r.value), num(c), std::isfinite(c) ? num(std::abs(c - r.value)) : ""});
  }
  return t.str();
}

}  // namespace facade_affect::app
