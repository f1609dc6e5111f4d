#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "facade_affect/core/csv.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/stats/basic.hpp"
#include "facade_affect/stats/ols.hpp"

namespace facade_affect::app {

using Json = nlohmann::ordered_json;

// Empty cell for values that do not exist (NaN, absent SD).
inline std::string num(double v) { return std::isfinite(v) ? csv::format_double(v) : (std::isnan(v) ? "" : (v > 0 ? "inf" : "-inf")); }
inline std::string num(const std::optional<double>& v) { return v ? num(*v) : ""; }

inline Json json_num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
inline Json json_num(const std::optional<double>& v) { return v ? json_num(*v) : Json(nullptr); }

class Table {
public:
  explicit Table(csv::Row header) : text_(csv::format_row(header)), width_(header.size()) {}
  void row(const csv::Row& r) {
    if (r.size() != width_) throw InputError(fmt::format("table row has {} cells, header has {}", r.size(), width_));
    text_ += csv::format_row(r);
  }
  const std::string& str() const { return text_; }

private:
  std::string text_;
  std::size_t width_;
};

inline Json to_json(const stats::OlsFit& f) {
  Json j;
  auto coefs = Json::array();
  for (std::size_t i = 0; i < f.names.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    coefs.push_back({{"name", f.names[i]},
                     {"estimate", json_num(f.coef(k))},
                     {"std_error", json_num(f.std_error(k))},
                     {"t_value", json_num(f.t_value(k))},
                     {"p_value", json_num(f.p_value(k))}});
  }
  j["coefficients"] = std::move(coefs);
  j["r_squared"] = json_num(f.r_squared);
  j["f_statistic"] = json_num(f.f_statistic);
  j["f_p_value"] = json_num(f.f_p_value);
  j["rss"] = json_num(f.rss);
  j["n"] = f.n;
  j["df_residual"] = f.df_residual;
  return j;
}

// Per-stimulus mean of a rating field over a rating set, ascending stimulus id.
template <class Field>
std::map<int, double> stimulus_means(const std::vector<RatingRecord>& ratings, Field field) {
  std::map<int, std::pair<double, int>> acc;
  for (const auto& r : ratings) {
    auto& [sum, n] = acc[r.stimulus_id];
    sum += static_cast<double>(field(r));
    ++n;
  }
  std::map<int, double> out;
  for (const auto& [sid, e] : acc) out[sid] = e.first / e.second;
  return out;
}

// "sam_valence" -> "valence"; other names unchanged.
inline std::string short_name(std::string_view field) {
  return std::string(field.substr(0, 4) == "sam_" ? field.substr(4) : field);
}

inline std::string list_ids(const std::set<int>& ids, std::size_t limit = 20) {
  std::string s;
  std::size_t i = 0;
  for (int id : ids) {
    if (i == limit) {
      s += fmt::format(", ... ({} more)", ids.size() - limit);
      break;
    }
    s += (i++ ? ", " : "") + std::to_string(id);
  }
  return s;
}

// Rating fields addressable by name.
struct RatingField {
  const char* name;
  int (*get)(const RatingRecord&);
};

inline const std::vector<RatingField>& percept_fields() {
  static const std::vector<RatingField> f = {
      {"perceived_complexity", [](const RatingRecord& r) { return r.perceived_complexity; }},
      {"perceived_transparency", [](const RatingRecord& r) { return r.perceived_transparency; }},
      {"perceived_materiality", [](const RatingRecord& r) { return r.perceived_materiality; }},
  };
  return f;
}

inline const std::vector<RatingField>& affect_fields() {
  static const std::vector<RatingField> f = {
      {"sam_valence", [](const RatingRecord& r) { return r.sam_valence; }},
      {"sam_arousal", [](const RatingRecord& r) { return r.sam_arousal; }},
  };
  return f;
}

// Machine feature paired with the perceived attribute it operationalises.
struct AttributePair {
  const char* attribute;
  const char* machine;
  const char* perceived;
};

inline const std::vector<AttributePair>& attribute_pairs() {
  static const std::vector<AttributePair> p = {
      {"complexity", "complexity_edge", "perceived_complexity"},
      {"transparency", "transparency", "perceived_transparency"},
      {"materiality", "materiality_natural", "perceived_materiality"},
  };
  return p;
}

inline std::optional<double> machine_value(const FeatureScores& f, std::string_view column) {
  if (column == "complexity_edge") return f.complexity_edge;
  if (column == "fractal_dimension_norm") return f.fractal_dimension_norm;
  if (column == "transparency") return f.transparency;
  if (column == "materiality_natural") return f.materiality_natural;
  throw InputError(fmt::format("unknown feature column '{}'", column));
}

}  // namespace facade_affect::app
