// Writes a synthetic facade corpus or synthetic rating files.
//
//   make_fixture_corpus corpus  --out DIR [--n-stimuli N] [--seed S]
//   make_fixture_corpus ratings --features F --plan P --out ratings.csv [--seed S] [--scale-max 5|9]
//   make_fixture_corpus field   --features F --out field.csv [--stimuli 15] [--raters 19] [--valence-shift D]

#include <algorithm>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "facade_affect/app/fixture.hpp"
#include "facade_affect/core/io.hpp"

namespace fa = facade_affect;
namespace fx = facade_affect::app::fixture;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fixtures for facade-affect"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  int scale_max = 5;
  fs::path out, features_path, plan_path;
  app.add_option("--seed", seed)->capture_default_str();
  app.add_option("--scale-max", scale_max)->check(CLI::IsMember({5, 9}))->capture_default_str();
  app.fallthrough();

  fx::CorpusOptions copt;
  auto* corpus = app.add_subcommand("corpus", "Images, masks and manifest.csv");
  corpus->add_option("--out", out)->required();
  corpus->add_option("--n-stimuli", copt.n_stimuli)->capture_default_str();
  corpus->add_option("--width", copt.width)->capture_default_str();
  corpus->add_option("--height", copt.height)->capture_default_str();
  corpus->add_flag("--no-material-masks", [&](std::int64_t) { copt.material_masks = false; });
  corpus->add_flag("--no-window-masks", [&](std::int64_t) { copt.window_masks = false; });

  fx::AffectModel model;
  auto* ratings = app.add_subcommand("ratings", "Online ratings following an assignment plan");
  ratings->add_option("--features", features_path)->required();
  ratings->add_option("--plan", plan_path)->required();
  ratings->add_option("--out", out)->required();

  int n_field_stimuli = 15, n_raters = 19;
  auto* field = app.add_subcommand("field", "Complete raters-by-stimuli ratings for a stimulus subset");
  field->add_option("--features", features_path)->required();
  field->add_option("--out", out)->required();
  field->add_option("--stimuli", n_field_stimuli)->capture_default_str();
  field->add_option("--raters", n_raters)->capture_default_str();
  field->add_option("--valence-shift", model.valence_shift)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*corpus) {
      copt.seed = seed;
      const auto rows = fx::write_corpus(out, copt);
      std::cout << fmt::format("wrote {} stimuli -> {}\n", rows.size(), (out / "manifest.csv").string());
    } else if (*ratings) {
      const auto records = fx::synthesize_ratings(fa::load_plan(plan_path), fa::load_features(features_path), seed,
                                                  scale_max, model);
      fa::save_ratings(out, records);
      std::cout << fmt::format("wrote {} ratings -> {}\n", records.size(), out.string());
    } else if (*field) {
      const auto features = fa::load_features(features_path);
      std::vector<int> ids;
      for (const auto& f : features) ids.push_back(f.stimulus_id);
      std::sort(ids.begin(), ids.end());
      ids.resize(std::min<std::size_t>(ids.size(), static_cast<std::size_t>(n_field_stimuli)));
      const auto records = fx::synthesize_ratings(fx::complete_plan(ids, n_raters), features, seed, scale_max, model,
                                                  /*with_descriptors=*/false);
      fa::save_ratings(out, records);
      std::cout << fmt::format("wrote {} ratings -> {}\n", records.size(), out.string());
    }
  } catch (const fa::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
