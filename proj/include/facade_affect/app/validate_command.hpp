#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "facade_affect/app/common.hpp"
#include "facade_affect/app/manifest.hpp"
#include "facade_affect/app/reference.hpp"
#include "facade_affect/app/svg.hpp"
#include "facade_affect/core/io.hpp"
#include "facade_affect/stats/correlation.hpp"
#include "facade_affect/stats/icc.hpp"
#include "facade_affect/stats/paired.hpp"

namespace facade_affect::app {

struct ValidateOptions {
  std::filesystem::path online;
  std::filesystem::path field;
  std::filesystem::path features;
  std::filesystem::path out_dir = ".";
  int scale_max = 5;
};

struct CrossContextRow {
  std::string variable;
  int n_stimuli = 0;
  std::optional<stats::PairedT> paired;  // absent when degenerate
  std::string paired_status;             // ok | degenerate
  std::optional<stats::IccResult> icc;
  std::optional<stats::Correlation> spearman;
};

struct ValidateOutcome {
  std::vector<CrossContextRow> cross_context;
  std::map<std::string, double> computed;
  RunManifest run{"validate"};
};

namespace detail {

// Human ratings mapped onto [0, 1]; materiality is stored as artificiality, so it is
// reversed to naturalness to line up with the natural-material ratio.
inline double normalised_percept(std::string_view field, double mean) {
  const double scaled = (mean - 1.0) / (kPerceptScaleMax - 1.0);
  return field == "perceived_materiality" ? 1.0 - scaled : scaled;
}

}  // namespace detail

inline ValidateOutcome run_validate(const ValidateOptions& opt) {
  ValidateOutcome out;
  auto& run = out.run;
  auto& cfg = run.config();
  cfg["online"] = opt.online.generic_string();
  cfg["field"] = opt.field.generic_string();
  cfg["features"] = opt.features.generic_string();
  cfg["scale_max"] = opt.scale_max;
  cfg["cross_context_icc"] = "ICC(2,1) on stimulus means, raters = {online, field}";
  cfg["field_icc"] = "ICC(2,1) on field stimuli x field raters, reduced to the largest complete sub-table";
  check_scale_max(opt.scale_max);

  const auto online = load_ratings(opt.online, opt.scale_max);
  run.input("online", opt.online);
  const auto field = load_ratings(opt.field, opt.scale_max);
  run.input("field", opt.field);
  const auto features = load_features(opt.features);
  run.input("features", opt.features);
  if (field.empty()) throw InputError("validate: field ratings are empty");

  auto attempt = [&](const std::string& what, auto&& fn) {
    try {
      fn();
    } catch (const ModelError& e) {
      run.warn(fmt::format("{} skipped: {}", what, e.what()));
    } catch (const InputError& e) {
      run.warn(fmt::format("{} skipped: {}", what, e.what()));
    }
  };

  // Machine-human agreement on the online ratings.
  std::map<int, FeatureScores> feature_by_id;
  for (const auto& f : features) feature_by_id.emplace(f.stimulus_id, f);
  Table agreement({"attribute", "machine", "human", "n", "spearman_rho", "spearman_p", "pearson_r", "pearson_p", "r_squared"});
  for (const auto& p : attribute_pairs()) {
    const auto field_it = std::find_if(percept_fields().begin(), percept_fields().end(),
                                       [&](const RatingField& f) { return std::string_view(f.name) == p.perceived; });
    const auto means = stimulus_means(online, field_it->get);
    std::vector<double> machine, human;
    for (const auto& [sid, m] : means) {
      auto f = feature_by_id.find(sid);
      if (f == feature_by_id.end()) continue;
      const auto v = machine_value(f->second, p.machine);
      if (!v) continue;
      machine.push_back(*v);
      human.push_back(detail::normalised_percept(p.perceived, m));
    }
    attempt(fmt::format("agreement {}", p.attribute), [&] {
      const auto rho = stats::spearman(machine, human);
      const auto r = stats::pearson(machine, human);
      agreement.row({p.attribute, p.machine, p.perceived, std::to_string(r.n), num(rho.r), num(rho.p_value), num(r.r),
                     num(r.p_value), num(r.r * r.r)});
      out.computed[fmt::format("agreement.spearman.{}", p.attribute)] = rho.r;
      out.computed[fmt::format("agreement.pearson.{}", p.attribute)] = r.r;

      svg::ScatterSpec s;
      s.title = fmt::format("Machine vs human {}", p.attribute);
      s.x_label = fmt::format("machine {} (0-1)", p.machine);
      s.y_label = fmt::format("human {} (0-1)", p.attribute == std::string("materiality") ? "naturalness" : p.attribute);
      s.x_range = svg::Range{0.0, 1.0};
      s.y_range = svg::Range{0.0, 1.0};
      for (std::size_t i = 0; i < machine.size(); ++i) s.points.push_back({machine[i], human[i]});
      s.curves.push_back({[](double x) { return x; }, "#999999", true, "identity"});
      const double mx = stats::mean(machine), my = stats::mean(human);
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < machine.size(); ++i) {
        sxy += (machine[i] - mx) * (human[i] - my);
        sxx += (machine[i] - mx) * (machine[i] - mx);
      }
      const double slope = sxy / sxx, icept = my - slope * mx;
      s.curves.push_back({[=](double x) { return icept + slope * x; }, "#c44e52", false, "linear fit"});
      s.notes = {fmt::format("rho = {:.3f}, R^2 = {:.3f}, n = {}", rho.r, r.r * r.r, r.n)};
      run.write(opt.out_dir, fmt::format("plots/agreement_{}.svg", p.attribute), svg::scatter(s));
    });
  }
  run.write(opt.out_dir, "agreement.csv", agreement.str());

  // Cross-context comparison on stimuli rated in both conditions.
  std::set<int> online_ids, field_ids, common;
  for (const auto& r : online) online_ids.insert(r.stimulus_id);
  for (const auto& r : field) field_ids.insert(r.stimulus_id);
  std::set_intersection(online_ids.begin(), online_ids.end(), field_ids.begin(), field_ids.end(),
                        std::inserter(common, common.end()));
  if (common.empty()) throw InputError("validate: online and field ratings share no stimuli");
  if (common.size() < field_ids.size())
    run.warn(fmt::format("{} field stimuli have no online ratings and are left out", field_ids.size() - common.size()));

  std::vector<RatingField> variables = percept_fields();
  variables.insert(variables.end(), affect_fields().begin(), affect_fields().end());

  Table cross({"variable", "n_stimuli", "online_mean", "field_mean", "mean_diff", "t", "df", "p_value", "paired_status",
               "icc21", "spearman_rho", "spearman_p"});
  Table reliability({"variable", "n_targets", "k_raters", "dropped_raters", "dropped_targets", "icc21"});
  for (const auto& v : variables) {
    const auto on = stimulus_means(online, v.get), fi = stimulus_means(field, v.get);
    std::vector<double> x, y;
    for (int sid : common) {
      x.push_back(on.at(sid));
      y.push_back(fi.at(sid));
    }
    CrossContextRow row;
    row.variable = v.name;
    row.n_stimuli = static_cast<int>(common.size());
    try {
      row.paired = stats::paired_t(x, y);
      row.paired_status = "ok";
    } catch (const DegenerateInputError&) {
      row.paired_status = "degenerate";
      run.warn(fmt::format("paired t for {}: online and field means are identical, test undefined", v.name));
    } catch (const InputError& e) {
      row.paired_status = "skipped";
      run.warn(fmt::format("paired t for {} skipped: {}", v.name, e.what()));
    }
    attempt(fmt::format("cross-context ICC {}", v.name), [&] {
      Eigen::MatrixXd t(static_cast<Eigen::Index>(x.size()), 2);
      for (std::size_t i = 0; i < x.size(); ++i) {
        t(static_cast<Eigen::Index>(i), 0) = x[i];
        t(static_cast<Eigen::Index>(i), 1) = y[i];
      }
      row.icc = stats::icc_2_1(t);
    });
    attempt(fmt::format("cross-context spearman {}", v.name), [&] { row.spearman = stats::spearman(x, y); });

    const std::string vn = v.name;
    if (row.paired) out.computed["paired_p." + vn] = row.paired->p_value;
    if (row.icc) out.computed["icc." + vn] = row.icc->icc21;
    if (row.spearman) out.computed["spearman." + vn] = row.spearman->r;
    cross.row({vn, std::to_string(row.n_stimuli), num(stats::mean(x)), num(stats::mean(y)),
               num(stats::mean(y) - stats::mean(x)), row.paired ? num(row.paired->t) : "",
               std::to_string(static_cast<int>(x.size()) - 1), row.paired ? num(row.paired->p_value) : "",
               row.paired_status, row.icc ? num(row.icc->icc21) : "", row.spearman ? num(row.spearman->r) : "",
               row.spearman ? num(row.spearman->p_value) : ""});

    svg::ScatterSpec s;
    s.title = fmt::format("Online vs field {}", short_name(vn));
    s.x_label = "online mean";
    s.y_label = "field mean";
    const int hi = std::string_view(vn).substr(0, 4) == "sam_" ? opt.scale_max : kPerceptScaleMax;
    s.x_range = svg::Range{0.5, hi + 0.5};
    s.y_range = svg::Range{0.5, hi + 0.5};
    for (std::size_t i = 0; i < x.size(); ++i) s.points.push_back({x[i], y[i]});
    s.curves.push_back({[](double u) { return u; }, "#999999", true, "identity"});
    if (!stats::is_constant(x)) {
      const double mx = stats::mean(x), my = stats::mean(y);
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
      }
      const double slope = sxy / sxx, icept = my - slope * mx;
      s.curves.push_back({[=](double u) { return icept + slope * u; }, "#c44e52", false, "linear fit"});
    }
    if (row.spearman) s.notes.push_back(fmt::format("rho = {:.3f}, p = {:.3f}", row.spearman->r, row.spearman->p_value));
    if (row.paired) s.notes.push_back(fmt::format("paired t = {:.3f}, p = {:.3f}", row.paired->t, row.paired->p_value));
    run.write(opt.out_dir, fmt::format("plots/cross_context_{}.svg", short_name(vn)), svg::scatter(s));
    out.cross_context.push_back(std::move(row));

    // Inter-rater reliability inside the field condition.
    std::set<std::string> raters;
    for (const auto& r : field) raters.insert(r.participant_id);
    std::vector<std::string> targets, rater_ids(raters.begin(), raters.end());
    std::map<int, Eigen::Index> row_of;
    for (int sid : field_ids) {
      row_of[sid] = static_cast<Eigen::Index>(targets.size());
      targets.push_back(std::to_string(sid));
    }
    Eigen::MatrixXd table = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(targets.size()),
                                                      static_cast<Eigen::Index>(rater_ids.size()), NAN);
    for (const auto& r : field) {
      const auto col = std::lower_bound(rater_ids.begin(), rater_ids.end(), r.participant_id) - rater_ids.begin();
      table(row_of.at(r.stimulus_id), static_cast<Eigen::Index>(col)) = v.get(r);
    }
    attempt(fmt::format("field ICC {}", vn), [&] {
      const auto complete = stats::reduce_to_complete(table, targets, rater_ids);
      const auto icc = stats::icc_2_1(complete.table);
      reliability.row({vn, std::to_string(icc.n_targets), std::to_string(icc.k_raters),
                       fmt::format("{}", fmt::join(complete.dropped_raters, "|")),
                       fmt::format("{}", fmt::join(complete.dropped_targets, "|")), num(icc.icc21)});
      out.computed["field_icc." + vn] = icc.icc21;
    });
  }
  run.write(opt.out_dir, "cross_context.csv", cross.str());
  run.write(opt.out_dir, "field_reliability.csv", reliability.str());
  run.write(opt.out_dir, "reference_comparison.csv", reference_table(validate_references(), out.computed));
  run.save(opt.out_dir);
  return out;
}

}  // namespace facade_affect::app
