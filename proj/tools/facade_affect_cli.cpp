// facade-affect: extract, design, analyze, validate, serve.
//
// Exit codes: 0 success, 2 invalid input/configuration/infeasible request,
// 3 file system errors, 1 anything unexpected.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "facade_affect/app/analyze_command.hpp"
#include "facade_affect/app/design_command.hpp"
#include "facade_affect/app/extract_command.hpp"
#include "facade_affect/app/validate_command.hpp"
#include "facade_affect/core/io.hpp"
#include "facade_affect/service/http.hpp"

namespace fa = facade_affect;
namespace fs = std::filesystem;

namespace {

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<std::string> read_lexicon(const fs::path& path) {
  std::vector<std::string> out;
  for (const auto& token : fa::detail::split(fa::csv::read_file(path), '\n')) {
    std::string t = token;
    while (!t.empty() && (t.back() == '\r' || t.back() == ' ')) t.pop_back();
    if (t.empty()) continue;
    if (!fa::is_valid_descriptor(t)) throw fa::ValidationError(fmt::format("lexicon: invalid token '{}'", t));
    out.push_back(t);
  }
  if (out.size() < 3) throw fa::ValidationError("lexicon: need at least 3 descriptors");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facade feature extraction, survey design and affect analysis"};
  app.fallthrough();
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  int scale_max = 5;
  fs::path out_dir = ".";
  app.add_option("--seed", seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--scale-max", scale_max, "SAM scale breadth")->check(CLI::IsMember({5, 9}))->capture_default_str();
  app.add_option("--out-dir", out_dir, "Directory for outputs and run-manifest.json")->capture_default_str();

  // extract
  fa::app::ExtractOptions ex;
  auto* extract = app.add_subcommand("extract", "Compute complexity, fractal dimension, transparency and materiality");
  extract->add_option("--manifest", ex.manifest, "Corpus manifest CSV")->required();
  extract->add_option("--canny-sigma", ex.config.canny.gaussian_sigma)->capture_default_str();
  extract->add_option("--canny-low", ex.config.canny.low_ratio)->capture_default_str();
  extract->add_option("--canny-high", ex.config.canny.high_ratio)->capture_default_str();
  extract->add_option("--box-scales", ex.config.box.scales, "Box sizes in pixels, descending")->delimiter(',');
  extract->add_option("--box-min-scales", ex.config.box.min_scales)->capture_default_str();
  extract->add_option("--threads", ex.threads)->capture_default_str();

  // design
  fa::app::DesignOptions de;
  std::string design_features;
  auto* design = app.add_subcommand("design", "Generate a balanced assignment plan and a power report");
  design->add_option("--features", design_features, "Feature CSV from extract");
  design->add_option("--participants", de.n_participants)->capture_default_str();
  design->add_option("--k", de.block_size_k, "Stimuli per participant")->capture_default_str();
  design->add_option("--min-replication", de.min_replication)->capture_default_str();
  design->add_flag("--power-only", de.power_only, "Only write the power report");
  design->add_option("--power-sims", de.power_simulations, "Monte-Carlo replications (0 skips)")->capture_default_str();
  design->add_option("--f2", de.effect_size_f2, "Cohen's f2 for the power simulation")->capture_default_str();
  design->add_option("--alpha", de.alpha)->capture_default_str();
  design->add_option("--n-stimuli", de.n_stimuli, "Stimulus count when no feature table is given")->capture_default_str();
  design->add_option("--threads", de.threads)->capture_default_str();

  // analyze
  fa::app::AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Descriptives, mixed models, group tests, correlations, mediation");
  analyze->add_option("--features", an.features)->required();
  analyze->add_option("--ratings", an.ratings)->required();
  analyze->add_option("--bootstrap", an.n_bootstrap, "Bootstrap replicates for mediation")->capture_default_str();

  // validate
  fa::app::ValidateOptions va;
  auto* validate = app.add_subcommand("validate", "Machine-human agreement and online/field consistency");
  validate->add_option("--online", va.online)->required();
  validate->add_option("--field", va.field)->required();
  validate->add_option("--features", va.features)->required();

  // serve
  fs::path plan_path, ratings_log, corpus_path, ui_dir, lexicon_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool allow_empty = false;
  auto* serve = app.add_subcommand("serve", "Run the rating collection service");
  serve->add_option("--plan", plan_path, "Assignment plan JSON")->required();
  serve->add_option("--ratings-log", ratings_log, "Append-only ratings CSV")->required();
  serve->add_option("--manifest", corpus_path, "Corpus manifest, for serving stimulus images");
  serve->add_option("--ui-dir", ui_dir, "Static survey UI bundle, served under /ui");
  serve->add_option("--lexicon", lexicon_path, "Descriptor lexicon, one token per line");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_flag("--allow-empty-descriptors", allow_empty, "Accept ratings without descriptors (field condition)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*extract) {
      ex.out_dir = out_dir;
      auto r = fa::app::run_extract(ex);
      print_warnings(r.run.warnings());
      std::cout << fmt::format("extracted {} stimuli -> {}\n", r.features.size(), (out_dir / "features.csv").string());
    } else if (*design) {
      de.out_dir = out_dir;
      de.seed = seed;
      if (!design_features.empty()) de.features = design_features;
      auto r = fa::app::run_design(de);
      print_warnings(r.run.warnings());
      if (r.plan)
        std::cout << fmt::format("plan: {} participants, {} assignments, replication {}..{}\n", r.plan->assignments.size(),
                                 r.plan->total_assignments(), r.balance->min_replication, r.balance->max_replication);
      if (r.power) std::cout << fmt::format("power: {}\n", r.power->power);
    } else if (*analyze) {
      an.out_dir = out_dir;
      an.seed = seed;
      an.scale_max = scale_max;
      auto r = fa::app::run_analyze(an);
      print_warnings(r.run.warnings());
      std::cout << fmt::format("analyzed {} ratings over {} stimuli -> {}\n", r.n_ratings,
                               r.descriptives.stimuli.size(), out_dir.string());
    } else if (*validate) {
      va.out_dir = out_dir;
      va.scale_max = scale_max;
      auto r = fa::app::run_validate(va);
      print_warnings(r.run.warnings());
      std::cout << fmt::format("validated {} variables -> {}\n", r.cross_context.size(), out_dir.string());
    } else if (*serve) {
      fa::service::ServiceConfig cfg;
      cfg.ratings_log = ratings_log;
      cfg.scale_max = scale_max;
      cfg.allow_empty_descriptors = allow_empty;
      if (!lexicon_path.empty()) {
        cfg.lexicon = read_lexicon(lexicon_path);
        cfg.lexicon_is_placeholder = false;
      }
      fa::service::CollectService svc(fa::load_plan(plan_path), cfg);
      print_warnings(svc.warnings());
      fa::service::HttpOptions http;
      if (!corpus_path.empty())
        for (const auto& s : fa::load_corpus(corpus_path)) http.stimulus_images[s.stimulus_id] = s.image_path;
      if (!ui_dir.empty()) http.ui_dir = ui_dir;
      httplib::Server server;
      fa::service::mount_routes(server, svc, http);
      std::cout << fmt::format("serving {} participants on http://{}:{}\n", svc.plan().assignments.size(), host, port)
                << std::flush;
      if (!server.listen(host, port)) throw fa::IoError(fmt::format("cannot listen on {}:{}", host, port));
    }
  } catch (const fa::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const fa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
