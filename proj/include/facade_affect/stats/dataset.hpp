#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/core/error.hpp"
#include "facade_affect/stats/basic.hpp"

namespace facade_affect::stats {

// Long-format observations: one row per (participant, stimulus) with named
// predictor columns and a single response.
struct LongDataset {
  std::string response_name = "response";
  std::vector<std::string> participant;
  std::vector<int> stimulus;
  std::map<std::string, std::vector<double>> predictors;
  std::vector<double> response;

  std::size_t size() const { return response.size(); }

  void add_row(std::string pid, int sid, const std::map<std::string, double>& values, double y) {
    if (!response.empty() && values.size() != predictors.size())
      throw InputError(fmt::format("row for ({}, {}) has {} predictors, dataset has {}", pid, sid, values.size(),
                                   predictors.size()));
    for (const auto& [name, v] : values) {
      auto& col = predictors[name];
      if (col.size() != response.size()) throw InputError(fmt::format("predictor '{}' missing in earlier rows", name));
      col.push_back(v);
    }
    participant.push_back(std::move(pid));
    stimulus.push_back(sid);
    response.push_back(y);
  }

  const std::vector<double>& column(const std::string& name) const {
    if (name == response_name) return response;
    auto it = predictors.find(name);
    if (it == predictors.end()) throw InputError(fmt::format("dataset has no column '{}'", name));
    return it->second;
  }

  std::size_t n_participants() const { return std::set<std::string>(participant.begin(), participant.end()).size(); }
  std::size_t n_stimuli() const { return std::set<int>(stimulus.begin(), stimulus.end()).size(); }

  void validate() const {
    const auto n = response.size();
    if (participant.size() != n || stimulus.size() != n) throw InputError("dataset columns differ in length");
    for (const auto& [name, col] : predictors)
      if (col.size() != n) throw InputError(fmt::format("predictor '{}' has {} values for {} rows", name, col.size(), n));
    std::set<std::pair<std::string, int>> seen;
    for (std::size_t i = 0; i < n; ++i)
      if (!seen.emplace(participant[i], stimulus[i]).second)
        throw InputError(fmt::format("duplicate cell ({}, {}) for response '{}'", participant[i], stimulus[i],
                                     response_name));
  }
};

// z-scores with the sample SD.
inline std::vector<double> standardize(const std::vector<double>& x, const std::string& name = "x") {
  const auto sd = sample_sd(x);
  if (!sd || *sd == 0.0) throw ModelError(fmt::format("predictor '{}' is constant and cannot be standardised", name));
  const double m = mean(x);
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m) / *sd;
  return z;
}

// Per-stimulus means of the named columns, rows ordered by stimulus id.
struct StimulusMeans {
  std::vector<int> stimulus;
  std::map<std::string, std::vector<double>> columns;
};

inline StimulusMeans aggregate_by_stimulus(const LongDataset& data, const std::vector<std::string>& names) {
  std::map<int, std::pair<std::vector<double>, int>> acc;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& [sums, n] = acc[data.stimulus[i]];
    sums.resize(names.size(), 0.0);
    for (std::size_t c = 0; c < names.size(); ++c) sums[c] += data.column(names[c])[i];
    ++n;
  }
  StimulusMeans out;
  for (const auto& [sid, entry] : acc) {
    out.stimulus.push_back(sid);
    for (std::size_t c = 0; c < names.size(); ++c) out.columns[names[c]].push_back(entry.first[c] / entry.second);
  }
  return out;
}

}  // namespace facade_affect::stats
