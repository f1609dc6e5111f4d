#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facade_affect/core/error.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/stats/basic.hpp"

namespace facade_affect::stats {

// Position in the valence-arousal plane split at the grand means.
enum class Quadrant { high_arousal_positive, high_arousal_negative, low_arousal_positive, low_arousal_negative };

inline std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::high_arousal_positive: return "high_arousal_positive";
    case Quadrant::high_arousal_negative: return "high_arousal_negative";
    case Quadrant::low_arousal_positive: return "low_arousal_positive";
    case Quadrant::low_arousal_negative: return "low_arousal_negative";
  }
  return "low_arousal_negative";
}

struct StimulusDescriptive {
  int stimulus_id = 0;
  int n_raters = 0;
  double mean_valence = 0.0;
  std::optional<double> sd_valence;  // absent with a single rater
  double mean_arousal = 0.0;
  std::optional<double> sd_arousal;
  Quadrant quadrant = Quadrant::low_arousal_negative;
};

struct Descriptives {
  std::vector<StimulusDescriptive> stimuli;  // ascending stimulus_id
  double grand_mean_valence = 0.0;           // mean of stimulus means
  double grand_mean_arousal = 0.0;
};

// Ties with the grand mean count as high.
inline Quadrant quadrant_of(double valence, double arousal, double grand_valence, double grand_arousal) {
  const bool high_a = arousal >= grand_arousal, pos_v = valence >= grand_valence;
  if (high_a) return pos_v ? Quadrant::high_arousal_positive : Quadrant::high_arousal_negative;
  return pos_v ? Quadrant::low_arousal_positive : Quadrant::low_arousal_negative;
}

inline Descriptives descriptives(const std::vector<RatingRecord>& ratings) {
  if (ratings.empty()) throw InputError("descriptives: no ratings");
  std::map<int, std::pair<std::vector<double>, std::vector<double>>> by_stimulus;
  for (const auto& r : ratings) {
    auto& [v, a] = by_stimulus[r.stimulus_id];
    v.push_back(r.sam_valence);
    a.push_back(r.sam_arousal);
  }
  Descriptives d;
  double sum_v = 0.0, sum_a = 0.0;
  for (const auto& [sid, va] : by_stimulus) {
    StimulusDescriptive s;
    s.stimulus_id = sid;
    s.n_raters = static_cast<int>(va.first.size());
    s.mean_valence = mean(va.first);
    s.sd_valence = sample_sd(va.first);
    s.mean_arousal = mean(va.second);
    s.sd_arousal = sample_sd(va.second);
    sum_v += s.mean_valence;
    sum_a += s.mean_arousal;
    d.stimuli.push_back(s);
  }
  d.grand_mean_valence = sum_v / static_cast<double>(d.stimuli.size());
  d.grand_mean_arousal = sum_a / static_cast<double>(d.stimuli.size());
  for (auto& s : d.stimuli)
    s.quadrant = quadrant_of(s.mean_valence, s.mean_arousal, d.grand_mean_valence, d.grand_mean_arousal);
  return d;
}

}  // namespace facade_affect::stats
