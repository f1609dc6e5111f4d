#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facade_affect/app/common.hpp"
#include "facade_affect/app/manifest.hpp"
#include "facade_affect/core/io.hpp"
#include "facade_affect/vision/extract.hpp"

namespace facade_affect::app {

struct ExtractOptions {
  std::filesystem::path manifest;
  std::filesystem::path out_dir = ".";
  vision::ExtractionConfig config;
  unsigned threads = 1;
};

struct ExtractOutcome {
  std::vector<FeatureScores> features;
  RunManifest run{"extract"};
};

// Writes features.csv and extraction-diagnostics.csv into out_dir.
inline ExtractOutcome run_extract(const ExtractOptions& opt) {
  ExtractOutcome out;
  auto& cfg = out.run.config();
  cfg["manifest"] = opt.manifest.generic_string();
  cfg["canny_sigma"] = opt.config.canny.gaussian_sigma;
  cfg["canny_low"] = opt.config.canny.low_ratio;
  cfg["canny_high"] = opt.config.canny.high_ratio;
  cfg["box_scales"] = opt.config.box.scales;
  cfg["box_min_scales"] = opt.config.box.min_scales;
  cfg["threads"] = opt.threads;

  opt.config.canny.validate();
  const auto records = load_corpus(opt.manifest);
  out.run.input("manifest", opt.manifest);
  const auto results = vision::extract_corpus(records, opt.config, opt.threads);

  Table diag({"stimulus_id", "fractal_r_squared", "window_source", "materiality_source"});
  for (const auto& r : results) {
    out.features.push_back(r.scores);
    out.run.warn_all(r.warnings);
    diag.row({std::to_string(r.scores.stimulus_id), num(r.fractal_r_squared),
              r.window_from_heuristic ? "heuristic" : "mask", r.scores.materiality_natural ? "mask" : "absent"});
  }
  out.run.write(opt.out_dir, "features.csv", format_features(out.features));
  out.run.write(opt.out_dir, "extraction-diagnostics.csv", diag.str());
  out.run.save(opt.out_dir);
  return out;
}

}  // namespace facade_affect::app
