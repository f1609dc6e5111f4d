#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facade_affect/app/common.hpp"
#include "facade_affect/app/manifest.hpp"
#include "facade_affect/core/io.hpp"
#include "facade_affect/design/assignment.hpp"
#include "facade_affect/design/power.hpp"
#include "facade_affect/design/stratify.hpp"

namespace facade_affect::app {

struct DesignOptions {
  std::optional<std::filesystem::path> features;  // required unless power_only
  std::filesystem::path out_dir = ".";
  int n_participants = 85;
  int block_size_k = 15;
  int min_replication = 12;
  std::uint64_t seed = 0;
  bool power_only = false;
  int power_simulations = 1000;  // 0 skips the power report
  double effect_size_f2 = 0.06;
  double alpha = 0.05;
  int n_stimuli = 86;  // used only without a feature table
  unsigned threads = 1;
};

struct DesignOutcome {
  std::optional<AssignmentPlan> plan;
  std::optional<design::BalanceReport> balance;
  std::optional<design::PowerResult> power;
  RunManifest run{"design"};
};

inline Json to_json(const design::StratificationSpec& s) {
  auto attrs = Json::array();
  for (const auto& a : s.attributes) {
    Json counts;
    for (auto t : {design::Tertile::low, design::Tertile::medium, design::Tertile::high}) {
      int n = 0;
      for (const auto& [id, label] : a.labels) n += label == t;
      counts[std::string(design::to_string(t))] = n;
    }
    attrs.push_back({{"name", a.name}, {"cut_low", a.cut_low}, {"cut_high", a.cut_high}, {"counts", counts}});
  }
  return {{"n_stimuli", s.stimulus_ids.size()}, {"attributes", attrs}};
}

inline Json to_json(const design::BalanceReport& b) {
  Json rep;
  for (const auto& [id, n] : b.replication) rep[std::to_string(id)] = n;
  return {{"total_assignments", b.total},
          {"min_replication", b.min_replication},
          {"max_replication", b.max_replication},
          {"spread", b.spread()},
          {"blocks_exact", b.blocks_exact},
          {"uncovered_blocks", b.uncovered_blocks},
          {"max_position_deviation", b.max_position_deviation},
          {"replication", rep}};
}

// Writes assignments.json and design-report.json (unless power_only) and power.csv.
inline DesignOutcome run_design(const DesignOptions& opt) {
  DesignOutcome out;
  auto& cfg = out.run.config();
  cfg["features"] = opt.features ? Json(opt.features->generic_string()) : Json(nullptr);
  cfg["participants"] = opt.n_participants;
  cfg["k"] = opt.block_size_k;
  cfg["min_replication"] = opt.min_replication;
  cfg["seed"] = opt.seed;
  cfg["power_only"] = opt.power_only;
  cfg["power_simulations"] = opt.power_simulations;
  cfg["f2"] = opt.effect_size_f2;
  cfg["alpha"] = opt.alpha;
  if (opt.power_simulations < 0) throw ConfigError("design: power simulations must be >= 0");

  int n_stimuli = opt.n_stimuli;
  if (opt.features) {
    const auto features = load_features(*opt.features);
    out.run.input("features", *opt.features);
    n_stimuli = static_cast<int>(features.size());
    if (!opt.power_only) {
      auto strata = design::stratify(features);
      out.run.warn_all(strata.warnings);
      std::vector<std::string> warnings;
      out.plan = design::generate_assignments(strata, opt.n_participants, opt.block_size_k, opt.min_replication,
                                              opt.seed, &warnings);
      out.run.warn_all(warnings);
      out.balance = design::check_balance(*out.plan, strata);
      out.run.write(opt.out_dir, "assignments.json", format_plan(*out.plan));
      Json report{{"stratification", to_json(strata)}, {"balance", to_json(*out.balance)}};
      out.run.write(opt.out_dir, "design-report.json", report.dump(2) + "\n");
    }
  } else if (!opt.power_only) {
    throw ConfigError("design: a feature table is required to build a plan (or pass --power-only)");
  }
  cfg["n_stimuli"] = n_stimuli;

  if (opt.power_simulations > 0) {
    design::PowerConfig pc;
    pc.effect_size_f2 = opt.effect_size_f2;
    pc.n_participants = opt.n_participants;
    pc.ratings_per_stimulus_min = opt.min_replication;
    pc.n_stimuli = n_stimuli;
    pc.block_size_k = opt.block_size_k;
    pc.n_simulations = opt.power_simulations;
    pc.alpha = opt.alpha;
    pc.seed = opt.seed;
    pc.threads = opt.threads;
    out.power = design::power_simulation(pc);
    out.run.warn_all(out.power->warnings);
    Table t({"n_participants", "f2", "power", "n_sims", "seed"});
    t.row({std::to_string(pc.n_participants), num(pc.effect_size_f2), num(out.power->power),
           std::to_string(pc.n_simulations - out.power->n_failures), std::to_string(pc.seed)});
    out.run.write(opt.out_dir, "power.csv", t.str());
  } else if (opt.power_only) {
    throw ConfigError("design: --power-only needs at least one power simulation");
  }
  out.run.save(opt.out_dir);
  return out;
}

}  // namespace facade_affect::app
