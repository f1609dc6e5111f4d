#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "facade_affect/app/common.hpp"
#include "facade_affect/app/manifest.hpp"
#include "facade_affect/app/reference.hpp"
#include "facade_affect/app/svg.hpp"
#include "facade_affect/core/io.hpp"
#include "facade_affect/core/random.hpp"
#include "facade_affect/stats/correlation.hpp"
#include "facade_affect/stats/descriptives.hpp"
#include "facade_affect/stats/lme.hpp"
#include "facade_affect/stats/mediation.hpp"
#include "facade_affect/stats/multivariate.hpp"
#include "facade_affect/stats/nonparametric.hpp"
#include "facade_affect/stats/ols.hpp"

namespace facade_affect::app {

struct AnalyzeOptions {
  std::filesystem::path features;
  std::filesystem::path ratings;
  std::filesystem::path out_dir = ".";
  int scale_max = 5;
  std::uint64_t seed = 0;
  int n_bootstrap = 5000;
};

struct AnalyzeOutcome {
  stats::Descriptives descriptives;
  std::size_t n_ratings = 0;             // after ID matching
  std::map<std::string, double> computed;  // keyed values shared with the reference table
  std::vector<std::string> refused;        // analyses not run because of the data
  RunManifest run{"analyze"};
};

namespace detail {

inline std::string quadrant_colour(stats::Quadrant q) {
  switch (q) {
    case stats::Quadrant::high_arousal_positive: return "#dd8452";
    case stats::Quadrant::high_arousal_negative: return "#c44e52";
    case stats::Quadrant::low_arousal_positive: return "#55a868";
    case stats::Quadrant::low_arousal_negative: return "#4c72b0";
  }
  return "#4c72b0";
}

inline std::string descriptives_csv(const stats::Descriptives& d) {
  Table t({"stimulus_id", "n_raters", "mean_valence", "sd_valence", "mean_arousal", "sd_arousal", "quadrant"});
  for (const auto& s : d.stimuli)
    t.row({std::to_string(s.stimulus_id), std::to_string(s.n_raters), num(s.mean_valence), num(s.sd_valence),
           num(s.mean_arousal), num(s.sd_arousal), std::string(stats::to_string(s.quadrant))});
  return t.str();
}

// Points shrink as rating dispersion grows; single-rater stimuli get the smallest size.
inline std::string affect_space_svg(const stats::Descriptives& d, int scale_max) {
  svg::ScatterSpec s;
  s.title = "Affect space (stimulus means)";
  s.x_label = "valence";
  s.y_label = "arousal";
  s.x_range = svg::Range{0.5, scale_max + 0.5};
  s.y_range = svg::Range{0.5, scale_max + 0.5};
  s.x_split = d.grand_mean_valence;
  s.y_split = d.grand_mean_arousal;
  for (const auto& st : d.stimuli) {
    double r = 2.5;
    if (st.sd_valence && st.sd_arousal) r = std::clamp(2.5 + 3.5 / (0.5 + (*st.sd_valence + *st.sd_arousal) / 2), 2.5, 9.0);
    s.points.push_back({st.mean_valence, st.mean_arousal, r, quadrant_colour(st.quadrant)});
  }
  for (auto q : {stats::Quadrant::high_arousal_positive, stats::Quadrant::high_arousal_negative,
                 stats::Quadrant::low_arousal_positive, stats::Quadrant::low_arousal_negative})
    s.legend.emplace_back(quadrant_colour(q), std::string(stats::to_string(q)));
  s.notes.push_back(fmt::format("grand means: valence {:.2f}, arousal {:.2f}", d.grand_mean_valence, d.grand_mean_arousal));
  return svg::scatter(s);
}

// OLS of y on a z-scored predictor, optionally with its square.
inline stats::OlsFit image_ols(const std::vector<double>& x, const std::vector<double>& y, const std::string& name,
                               bool quadratic) {
  const auto z = stats::standardize(x, name);
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd X(n, quadratic ? 3 : 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = z[static_cast<std::size_t>(i)];
    X(i, 0) = 1.0;
    X(i, 1) = v;
    if (quadratic) X(i, 2) = v * v;
  }
  std::vector<std::string> names{stats::kInterceptName, name};
  if (quadratic) names.push_back(name + "^2");
  return stats::fit_ols(X, Eigen::Map<const Eigen::VectorXd>(y.data(), n), names);
}

// Raw-scale polynomial coefficients for drawing, lowest order first.
inline std::vector<double> raw_polyfit(const std::vector<double>& x, const std::vector<double>& y, int degree) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd X(n, degree + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int d = 0; d <= degree; ++d) X(i, d) = std::pow(x[static_cast<std::size_t>(i)], d);
  const Eigen::VectorXd c = stats::ols_coefficients(X, Eigen::Map<const Eigen::VectorXd>(y.data(), n));
  return {c.data(), c.data() + c.size()};
}

inline std::function<double(double)> polynomial(std::vector<double> c) {
  return [c = std::move(c)](double x) {
    double v = 0.0, p = 1.0;
    for (double k : c) {
      v += k * p;
      p *= x;
    }
    return v;
  };
}

}  // namespace detail

// Full report for one rating set joined to one feature table.
inline AnalyzeOutcome run_analyze(const AnalyzeOptions& opt) {
  AnalyzeOutcome out;
  auto& run = out.run;
  auto& cfg = run.config();
  cfg["features"] = opt.features.generic_string();
  cfg["ratings"] = opt.ratings.generic_string();
  cfg["scale_max"] = opt.scale_max;
  cfg["seed"] = opt.seed;
  cfg["n_bootstrap"] = opt.n_bootstrap;
  cfg["p_values"] = "mixed models: Wald z, normal reference; image-mean OLS: t";
  cfg["mediation_coding"] = "x = machine score, m = mean human rating of the same attribute, y = mean affect";
  check_scale_max(opt.scale_max);
  if (opt.n_bootstrap < 1) throw ConfigError("analyze: n_bootstrap must be >= 1");

  const auto features = load_features(opt.features);
  run.input("features", opt.features);
  const auto ratings = load_ratings(opt.ratings, opt.scale_max);
  run.input("ratings", opt.ratings);

  std::map<int, FeatureScores> feature_by_id;
  for (const auto& f : features) feature_by_id.emplace(f.stimulus_id, f);
  std::vector<RatingRecord> matched;
  std::set<int> unmatched, rated;
  for (const auto& r : ratings) {
    if (feature_by_id.count(r.stimulus_id)) {
      matched.push_back(r);
      rated.insert(r.stimulus_id);
    } else {
      unmatched.insert(r.stimulus_id);
    }
  }
  if (!unmatched.empty())
    run.warn(fmt::format("ratings reference {} stimulus ids missing from the feature table (dropped): {}",
                         unmatched.size(), list_ids(unmatched)));
  std::set<int> unrated;
  for (const auto& [id, f] : feature_by_id)
    if (!rated.count(id)) unrated.insert(id);
  if (!unrated.empty())
    run.warn(fmt::format("{} stimuli in the feature table have no ratings: {}", unrated.size(), list_ids(unrated)));
  if (matched.empty()) throw InputError("analyze: ratings and feature table share no stimulus ids");
  out.n_ratings = matched.size();

  out.descriptives = stats::descriptives(matched);
  run.write(opt.out_dir, "descriptives.csv", detail::descriptives_csv(out.descriptives));
  run.write(opt.out_dir, "plots/affect_space.svg", detail::affect_space_svg(out.descriptives, opt.scale_max));

  std::set<std::string> participants;
  for (const auto& r : matched) participants.insert(r.participant_id);
  Json summary{{"n_ratings", matched.size()},
               {"n_stimuli", rated.size()},
               {"n_participants", participants.size()},
               {"grand_mean_valence", out.descriptives.grand_mean_valence},
               {"grand_mean_arousal", out.descriptives.grand_mean_arousal}};

  auto finish = [&] {
    summary["refused"] = out.refused;
    run.write(opt.out_dir, "summary.json", summary.dump(2) + "\n");
    run.write(opt.out_dir, "reference_comparison.csv", reference_table(analyze_references(), out.computed));
    run.save(opt.out_dir);
  };
  if (rated.size() < 2) {
    out.refused = {"mixed models", "image-mean models", "group tests", "correlations", "mediation"};
    run.warn(fmt::format("only {} rated stimulus; models, tests, correlations and mediation need at least 2, "
                         "only descriptives were produced",
                         rated.size()));
    finish();
    return out;
  }

  auto attempt = [&](const std::string& what, auto&& fn) {
    try {
      fn();
    } catch (const ModelError& e) {
      run.warn(fmt::format("{} skipped: {}", what, e.what()));
    } catch (const InputError& e) {
      run.warn(fmt::format("{} skipped: {}", what, e.what()));
    } catch (const SimulationError& e) {
      run.warn(fmt::format("{} skipped: {}", what, e.what()));
    }
  };

  // Machine columns shared by every stimulus in the analysis.
  std::vector<std::string> machine_cols{"complexity_edge", "fractal_dimension_norm", "transparency"};
  const bool have_materiality = std::all_of(rated.begin(), rated.end(), [&](int id) {
    return feature_by_id.at(id).materiality_natural.has_value();
  });
  if (have_materiality)
    machine_cols.push_back("materiality_natural");
  else
    run.warn("materiality_natural is missing for some rated stimuli; machine materiality analyses skipped");

  Table coef({"model", "granularity", "response", "form", "term", "estimate", "std_error", "statistic", "p_value", "n"});
  std::vector<svg::Bar> bars;
  Table kw({"response", "attribute", "levels", "h", "df", "p_value", "n"});
  Table mw({"response", "attribute", "level_a", "level_b", "u", "p_raw", "p_adjusted", "method"});
  Table corr({"granularity", "x", "y", "method", "estimate", "p_value", "n"});
  Table r2({"granularity", "response", "predictors", "r_squared", "f_statistic", "df1", "df2", "p_value", "n"});
  Json mediation = Json::array();

  auto write_lme = [&](const std::string& id, const std::string& response, const std::string& form,
                       const ModelFit& fit, Json extra) {
    for (const auto& e : fit.fixed_effects)
      coef.row({id, "observation", response, form, e.name, num(e.estimate), num(e.std_error), num(e.z_value),
                num(e.p_value), std::to_string(fit.n_obs)});
    Json j{{"model", id}, {"granularity", "observation"}, {"response", response}, {"form", form}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    j["fit"] = to_json(fit);
    run.write(opt.out_dir, "models/" + id + ".json", j.dump(2) + "\n");
  };
  auto write_ols = [&](const std::string& id, const std::string& response, const std::string& form,
                       const std::string& predictor, const stats::OlsFit& fit) {
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      coef.row({id, "image_mean", response, form, fit.names[i], num(fit.coef(k)), num(fit.std_error(k)),
                num(fit.t_value(k)), num(fit.p_value(k)), std::to_string(fit.n)});
    }
    Json j{{"model", id}, {"granularity", "image_mean"}, {"response", response}, {"form", form},
           {"predictor", predictor}, {"predictor_scaling", "z-scored"}, {"fit", to_json(fit)}};
    run.write(opt.out_dir, "models/" + id + ".json", j.dump(2) + "\n");
  };

  std::uint64_t mediation_index = 0;
  for (const auto& resp : affect_fields()) {
    const std::string rname = resp.name, rshort = short_name(rname);
    stats::LongDataset data;
    data.response_name = rname;
    for (const auto& r : matched) {
      std::map<std::string, double> values;
      for (const auto& pf : percept_fields()) values[pf.name] = pf.get(r);
      const auto& f = feature_by_id.at(r.stimulus_id);
      for (const auto& c : machine_cols) values[c] = *machine_value(f, c);
      data.add_row(r.participant_id, r.stimulus_id, values, resp.get(r));
    }

    // Observation level: one random-intercept model per perceived attribute.
    for (const auto& p : attribute_pairs()) {
      const std::string attr = p.attribute, col = p.perceived;
      const std::string base = fmt::format("lme_{}_{}", rshort, attr);
      attempt(base + "_linear", [&] {
        const auto fit = stats::fit_lme_random_intercept(data, {stats::Term::main(col)});
        write_lme(base + "_linear", rname, "linear", fit, {{"predictor", col}});
        const auto& e = fit.effect(col);
        out.computed[fmt::format("lme.{}.{}", rname, col)] = e.estimate;
        bars.push_back({fmt::format("{} ~ {}", rshort, attr), e.estimate, 1.959963984540054 * e.std_error,
                        rshort == "valence" ? "#4c72b0" : "#dd8452"});
      });
      attempt(base + "_quadratic", [&] {
        const auto poly = stats::fit_polynomial_effect(data, col);
        write_lme(base + "_quadratic", rname, "quadratic", poly.fit, {{"predictor", col}, {"inverted_u", poly.inverted_u}});
      });
    }
    attempt(fmt::format("lme_{}_interaction", rshort), [&] {
      const auto fit = stats::fit_three_way_interaction(data, "perceived_complexity", "perceived_transparency",
                                                        "perceived_materiality");
      write_lme(fmt::format("lme_{}_interaction", rshort), rname, "three_way_interaction", fit, Json::object());
      out.computed[fmt::format("lme.{}.interaction", rname)] =
          fit.effect("perceived_complexity:perceived_transparency:perceived_materiality").estimate;
    });

    // Image-mean level.
    std::vector<std::string> agg_cols;
    for (const auto& pf : percept_fields()) agg_cols.push_back(pf.name);
    agg_cols.insert(agg_cols.end(), machine_cols.begin(), machine_cols.end());
    agg_cols.push_back(rname);
    const auto agg = stats::aggregate_by_stimulus(data, agg_cols);
    const auto& ymean = agg.columns.at(rname);

    for (const auto& p : attribute_pairs()) {
      const std::string attr = p.attribute;
      attempt(fmt::format("ols_{}_{}_perceived", rshort, attr), [&] {
        const auto fit = detail::image_ols(agg.columns.at(p.perceived), ymean, p.perceived, false);
        write_ols(fmt::format("ols_{}_{}_perceived_linear", rshort, attr), rname, "linear", p.perceived, fit);
        out.computed[fmt::format("ols.{}.{}", rname, p.perceived)] = fit.estimate(p.perceived);
      });
    }
    for (const auto& c : machine_cols) {
      for (bool quad : {false, true}) {
        const std::string id = fmt::format("ols_{}_{}_{}", rshort, c, quad ? "quadratic" : "linear");
        attempt(id, [&] { write_ols(id, rname, quad ? "quadratic" : "linear", c, detail::image_ols(agg.columns.at(c), ymean, c, quad)); });
      }
    }

    std::vector<std::string> r2_predictors{"complexity_edge", "transparency"};
    if (have_materiality) r2_predictors.push_back("materiality_natural");
    attempt("multivariate R^2 " + rname, [&] {
      const auto m = stats::multivariate_r2(data, r2_predictors, rname);
      r2.row({"image_mean", rname, fmt::format("{}", fmt::join(r2_predictors, "+")), num(m.r_squared),
              num(m.f_statistic), std::to_string(m.df1), std::to_string(m.df2), num(m.p_value), std::to_string(m.n)});
      out.computed["r2." + rname] = m.r_squared;
    });

    // Group tests on individual ratings split by perceived level.
    for (const auto& pf : percept_fields()) {
      attempt(fmt::format("group tests {} by {}", rname, pf.name), [&] {
        std::map<int, std::vector<double>> by_level;
        for (const auto& r : matched) by_level[pf.get(r)].push_back(resp.get(r));
        std::vector<std::vector<double>> groups;
        std::vector<int> levels;
        for (auto& [lvl, g] : by_level) {
          if (g.size() < 2) continue;
          levels.push_back(lvl);
          groups.push_back(std::move(g));
        }
        if (levels.size() < by_level.size())
          run.warn(fmt::format("group tests {} by {}: levels with a single rating left out", rname, pf.name));
        const auto k = stats::kruskal_wallis(groups);
        std::size_t n = 0;
        for (const auto& g : groups) n += g.size();
        kw.row({rname, pf.name, fmt::format("{}", fmt::join(levels, "|")), num(k.h), std::to_string(k.df),
                num(k.p_value), std::to_string(n)});
        for (const auto& c : stats::mann_whitney_bonferroni(groups))
          mw.row({rname, pf.name, std::to_string(levels[c.group_a]), std::to_string(levels[c.group_b]), num(c.u),
                  num(c.p_raw), num(c.p_adjusted), c.exact ? "exact" : "normal"});
      });
    }

    // Image-level correlations of every machine and mean perceived score with mean affect.
    std::vector<std::string> xs = machine_cols;
    for (const auto& pf : percept_fields()) xs.push_back(pf.name);
    for (const auto& x : xs) {
      for (const char* method : {"spearman", "pearson"}) {
        attempt(fmt::format("{} {} ~ {}", method, x, rname), [&] {
          const auto& xv = agg.columns.at(x);
          const auto c = std::string_view(method) == "spearman" ? stats::spearman(xv, ymean) : stats::pearson(xv, ymean);
          corr.row({"image_mean", x, rname, method, num(c.r), num(c.p_value), std::to_string(c.n)});
          out.computed[fmt::format("{}.{}.{}", method, x, rname)] = c.r;
        });
      }
    }

    // Mediation: machine score -> mean perceived attribute -> mean affect.
    for (const auto& p : attribute_pairs()) {
      const std::uint64_t index = mediation_index++;
      if (std::find(machine_cols.begin(), machine_cols.end(), p.machine) == machine_cols.end()) continue;
      attempt(fmt::format("mediation {} -> {}", p.attribute, rname), [&] {
        const auto m = stats::mediate(agg.columns.at(p.machine), agg.columns.at(p.perceived), ymean, opt.n_bootstrap,
                                      derive_seed(opt.seed, index));
        mediation.push_back({{"granularity", "image_mean"},
                             {"x", p.machine},
                             {"mediator", p.perceived},
                             {"y", rname},
                             {"n", agg.stimulus.size()},
                             {"path_a", m.path_a},
                             {"path_b", m.path_b},
                             {"direct_effect", m.direct_effect},
                             {"direct_ci_low", m.direct_ci_low},
                             {"direct_ci_high", m.direct_ci_high},
                             {"total_effect", m.total_effect},
                             {"indirect_effect", m.indirect_effect},
                             {"indirect_ci_low", m.indirect_ci_low},
                             {"indirect_ci_high", m.indirect_ci_high},
                             {"indirect_p", m.indirect_p},
                             {"n_bootstrap", m.n_bootstrap},
                             {"seed", m.seed}});
        out.computed[fmt::format("mediation.{}.{}", p.attribute, rname)] = m.indirect_effect;
        out.computed[fmt::format("mediation_p.{}.{}", p.attribute, rname)] = m.indirect_p;
      });
    }

    // Attribute scatter plots with linear (dashed) and quadratic overlays.
    for (const auto& x : xs) {
      const auto& xv = agg.columns.at(x);
      if (stats::is_constant(xv)) continue;
      svg::ScatterSpec s;
      s.title = fmt::format("{} vs mean {}", x, rshort);
      s.x_label = x;
      s.y_label = "mean " + rshort;
      for (std::size_t i = 0; i < xv.size(); ++i) s.points.push_back({xv[i], ymean[i]});
      s.curves.push_back({detail::polynomial(detail::raw_polyfit(xv, ymean, 1)), "#c44e52", true, "linear"});
      if (xv.size() > 3)
        s.curves.push_back({detail::polynomial(detail::raw_polyfit(xv, ymean, 2)), "#222222", false, "quadratic"});
      s.legend = {{"#c44e52", "linear (dashed)"}, {"#222222", "quadratic"}};
      run.write(opt.out_dir, fmt::format("plots/scatter_{}_{}.svg", rshort, x), svg::scatter(s));
    }
  }

  run.write(opt.out_dir, "coefficients.csv", coef.str());
  run.write(opt.out_dir, "kruskal_wallis.csv", kw.str());
  run.write(opt.out_dir, "mann_whitney.csv", mw.str());
  run.write(opt.out_dir, "correlations.csv", corr.str());
  run.write(opt.out_dir, "multivariate_r2.csv", r2.str());
  run.write(opt.out_dir, "mediation.json", mediation.dump(2) + "\n");
  run.write(opt.out_dir, "plots/coefficients.svg",
            svg::bar_chart("Standardised coefficients, random-intercept models (95% Wald CI)", "beta", bars));
  finish();
  return out;
}

}  // namespace facade_affect::app
