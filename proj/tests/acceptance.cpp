// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "facade_affect/app/analyze_command.hpp"
#include "facade_affect/app/design_command.hpp"
#include "facade_affect/app/extract_command.hpp"
#include "facade_affect/app/fixture.hpp"
#include "facade_affect/app/reference.hpp"
#include "facade_affect/app/validate_command.hpp"
#include "facade_affect/core/csv.hpp"
#include "facade_affect/design/assignment.hpp"
#include "facade_affect/design/power.hpp"
#include "facade_affect/stats/descriptives.hpp"
#include "facade_affect/stats/icc.hpp"
#include "facade_affect/stats/lme.hpp"
#include "facade_affect/stats/mediation.hpp"
#include "facade_affect/stats/nonparametric.hpp"
#include "facade_affect/stats/ols.hpp"
#include "facade_affect/vision/box_count.hpp"
#include "facade_affect/vision/ratios.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace fa = facade_affect;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, std::string what) {
    if (!ok) pass = false;
    notes.push_back((ok ? "" : "!") + std::move(what));
  }
};

unsigned worker_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<double> normals(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// ---------------------------------------------------------------------------

Outcome fractal_fixtures() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto line = fa::vision::fractal_dimension(fa::testing::horizontal_line(256, 100));
  const auto plane = fa::vision::fractal_dimension(fa::vision::BinaryMask(256, 256, 1));
  const auto gasket = fa::vision::fractal_dimension(fa::testing::sierpinski(256, 7));
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const double sierpinski_d = std::log(3.0) / std::log(2.0);
  o.check(std::abs(line.dimension - 1.0) <= 0.05 && line.r_squared >= 0.95,
          fmt::format("line D={:.4f} R2={:.4f}", line.dimension, line.r_squared));
  o.check(std::abs(plane.dimension - 2.0) <= 0.05 && plane.r_squared >= 0.95,
          fmt::format("square D={:.4f} R2={:.4f}", plane.dimension, plane.r_squared));
  o.check(std::abs(gasket.dimension - sierpinski_d) <= 0.05 && gasket.r_squared >= 0.95,
          fmt::format("sierpinski D={:.4f} R2={:.4f}", gasket.dimension, gasket.r_squared));
  o.check(secs < 5.0, fmt::format("{:.3f}s", secs));
  return o;
}

fa::vision::BinaryMask first_n_set(int w, int h, int n) {
  fa::vision::BinaryMask m(w, h, 0);
  for (int i = 0; i < n; ++i) m.pixels()[static_cast<std::size_t>(i)] = 1;
  return m;
}

fa::vision::MaterialMask first_n_natural(int w, int h, int n) {
  fa::vision::MaterialMask m(w, h, fa::vision::Material::glass);
  for (int i = 0; i < n; ++i)
    m.pixels()[static_cast<std::size_t>(i)] = i % 2 ? fa::vision::Material::brick : fa::vision::Material::wood;
  return m;
}

Outcome ratio_metrics() {
  Outcome o;
  const fa::vision::BinaryMask facade(20, 10, 1);  // 200 px
  for (double target : {0.0, 0.25, 0.60, 1.0}) {
    const int n = static_cast<int>(std::lround(target * 200));
    const double t = fa::vision::transparency_ratio(first_n_set(20, 10, n), facade).ratio;
    const double m = fa::vision::natural_material_ratio(first_n_natural(20, 10, n), facade);
    o.check(t == target && m == target, fmt::format("{}: T={} M={}", target, t, m));
  }
  const fa::vision::BinaryMask hundred(10, 10, 1);
  for (double target : {0.07, 0.62}) {
    const double t = fa::vision::transparency_ratio(first_n_set(10, 10, static_cast<int>(std::lround(target * 100))), hundred).ratio;
    o.check(t == target, fmt::format("T range {}={}", target, t));
  }
  for (double target : {0.00, 0.93}) {
    const double m = fa::vision::natural_material_ratio(first_n_natural(10, 10, static_cast<int>(std::lround(target * 100))), hundred);
    o.check(m == target, fmt::format("M range {}={}", target, m));
  }
  return o;
}

Outcome design_balance() {
  Outcome o;
  const auto strata = fa::design::stratify(fa::testing::synthetic_features(86, 2024));
  int passed = 0;
  std::size_t total = 0;
  int worst_min = 1 << 30, worst_spread = 0;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto plan = fa::design::generate_assignments(strata, 85, 15, 12, seed);
    const auto r = fa::design::check_balance(plan, strata);
    total = r.total;
    worst_min = std::min(worst_min, r.min_replication);
    worst_spread = std::max(worst_spread, r.spread());
    passed += r.total == 1275 && r.blocks_exact && r.min_replication >= 12 && r.spread() <= 2 &&
              r.uncovered_blocks.empty() && plan.assignments.size() == 85;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  o.check(passed == 100, fmt::format("{}/100 seeds balanced (total {}, min rep {}, max spread {})", passed, total,
                                     worst_min, worst_spread));
  o.check(secs < 10.0, fmt::format("{:.2f}s", secs));
  return o;
}

Outcome power() {
  Outcome o;
  const auto t0 = Clock::now();
  fa::design::PowerConfig cfg;
  cfg.seed = 1;
  cfg.threads = worker_threads();
  const auto alt = fa::design::power_simulation(cfg);
  cfg.effect_size_f2 = 0.0;
  cfg.seed = 2;
  const auto null = fa::design::power_simulation(cfg);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  o.check(alt.power >= 0.80, fmt::format("power={:.3f} over {} sims", alt.power, alt.p_values.size()));
  o.check(std::abs(null.power - 0.05) <= 0.02, fmt::format("null rate={:.3f}", null.power));
  o.check(secs < 300.0, fmt::format("{:.1f}s", secs));
  return o;
}

Outcome lme_recovery() {
  Outcome o;
  const double beta = 0.507;
  const auto t0 = Clock::now();
  double sum = 0;
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto s = fa::testing::synthetic_lme(5000 + static_cast<std::uint64_t>(rep), beta, 0.5, 1.0);
    const auto e = fa::stats::fit_lme_random_intercept(s.data, {fa::stats::Term::main("complexity")}).effect("complexity");
    sum += e.estimate;
    covered += std::abs(e.estimate - beta) <= 1.959963984540054 * e.std_error;
  }
  const double mean = sum / 200, coverage = covered / 200.0;
  o.check(std::abs(mean - beta) <= 0.02, fmt::format("mean={:.4f}", mean));
  o.check(coverage >= 0.92 && coverage <= 0.975, fmt::format("coverage={:.3f}", coverage));

  // Residuals centred within participant: the REML optimum has no participant variance.
  std::mt19937_64 rng(5);
  fa::stats::LongDataset d;
  for (int p = 0; p < 85; ++p) {
    auto e = normals(15, rng);
    const double m = std::accumulate(e.begin(), e.end(), 0.0) / 15;
    for (int s = 0; s < 15; ++s) {
      const double x = std::sin(1.3 * s + p), w = std::cos(0.7 * s * s + p);
      d.add_row(fmt::format("p{}", p), s + 1, {{"x", x}, {"w", w}}, 0.5 * x - 0.2 * w + (e[static_cast<std::size_t>(s)] - m));
    }
  }
  const std::vector<fa::stats::Term> terms{fa::stats::Term::main("x"), fa::stats::Term::main("w")};
  const auto fit = fa::stats::fit_lme_random_intercept(d, terms);
  const auto design = fa::stats::build_design(d, terms, fa::stats::Scaling::z_score);
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(d.response.data(), static_cast<Eigen::Index>(d.size()));
  const auto ols = fa::stats::fit_ols(design.X, y, design.names);
  double max_diff = 0;
  for (std::size_t i = 0; i < ols.names.size(); ++i)
    max_diff = std::max(max_diff, std::abs(fit.fixed_effects[i].estimate - ols.coef(static_cast<Eigen::Index>(i))));
  o.check(fit.variance_participant == 0.0 && max_diff <= 1e-6,
          fmt::format("sigma_u=0 vs OLS max diff={:.2e}", max_diff));
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  o.check(secs < 120.0, fmt::format("{:.1f}s", secs));
  return o;
}

Outcome nonparametric() {
  Outcome o;
  std::mt19937_64 rng(41);
  double worst = 0;
  for (int n1 = 2; n1 <= 5; ++n1)
    for (int n2 = 2; n2 <= 5; ++n2)
      for (int trial = 0; trial < 20; ++trial) {
        auto x = normals(static_cast<std::size_t>(n1), rng), y = normals(static_cast<std::size_t>(n2), rng);
        for (auto& v : y) v += 0.3 * (trial % 4);
        worst = std::max(worst, std::abs(fa::stats::mann_whitney(x, y).p_value -
                                         fa::testing::mann_whitney_exact_bruteforce(x, y)));
      }
  o.check(worst <= 0.005, fmt::format("MW max |p - enumeration|={:.2e}", worst));

  const double h = fa::stats::kruskal_wallis({{1, 2, 3}, {10, 11, 12}}).h;
  o.check(std::abs(h - 3.857) <= 0.001, fmt::format("KW H={:.5f}", h));

  const std::vector<std::vector<double>> table{{4, 5, 4}, {2, 3, 3}, {5, 5, 4}, {1, 2, 1}, {3, 4, 5}, {4, 4, 2}};
  Eigen::MatrixXd m(6, 3);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = table[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  const double icc = fa::stats::icc_2_1(m).icc21, oracle = fa::testing::two_way_anova(table).icc21;
  o.check(std::abs(icc - oracle) <= 1e-10, fmt::format("ICC={:.10f} oracle={:.10f}", icc, oracle));
  return o;
}

struct MediationSample {
  std::vector<double> x, m, y;
};

MediationSample mediation_sample(std::uint64_t seed, std::size_t n, double a, double b, double c, double noise) {
  std::mt19937_64 rng(seed);
  MediationSample s;
  s.x = normals(n, rng);
  const auto em = normals(n, rng, noise), ey = normals(n, rng, noise);
  for (std::size_t i = 0; i < n; ++i) {
    s.m.push_back(a * s.x[i] + em[i]);
    s.y.push_back(b * s.m.back() + c * s.x[i] + ey[i]);
  }
  return s;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

Outcome mediation() {
  Outcome o;
  // Full mediation, a = b = 1, noise SD 0.5 on both equations, x ~ N(0, 1).
  const std::size_t n = 200;
  const double a = 1.0, b = 1.0, noise = 0.5;
  const auto s = mediation_sample(1, n, a, b, 0.0, noise);
  const auto r = fa::stats::mediate(s.x, s.m, s.y, 5000, 7);
  // Delta-method sampling SD of a_hat * b_hat under the generating process.
  const double se_a = noise / std::sqrt(double(n)), se_b = noise / (noise * std::sqrt(double(n)));
  const double se_ab = std::sqrt(b * b * se_a * se_a + a * a * se_b * se_b);
  o.check(std::abs(r.indirect_effect - a * b) <= 3 * se_ab,
          fmt::format("indirect={:.4f} vs {} (3 SE={:.3f})", r.indirect_effect, a * b, 3 * se_ab));
  o.check(r.direct_ci_low <= 0.0 && r.direct_ci_high >= 0.0,
          fmt::format("direct CI [{:.3f}, {:.3f}]", r.direct_ci_low, r.direct_ci_high));

  int positives = 0;
  for (int sim = 0; sim < 200; ++sim) {
    const auto null = mediation_sample(100 + static_cast<std::uint64_t>(sim), 86, 0.6, 0.0, 0.0, 1.0);
    positives += fa::stats::mediate(null.x, null.m, null.y, 1000, static_cast<std::uint64_t>(sim)).indirect_p < 0.05;
  }
  o.check(positives / 200.0 <= 0.08, fmt::format("null false-positive rate={:.3f}", positives / 200.0));

  const auto again = fa::stats::mediate(s.x, s.m, s.y, 5000, 7);
  o.check(same_bits(r.indirect_effect, again.indirect_effect) && same_bits(r.indirect_ci_low, again.indirect_ci_low) &&
              same_bits(r.indirect_ci_high, again.indirect_ci_high) && same_bits(r.indirect_p, again.indirect_p) &&
              same_bits(r.direct_ci_low, again.direct_ci_low) && same_bits(r.direct_ci_high, again.direct_ci_high),
          "fixed seed bit-identical");
  return o;
}

Outcome image_55() {
  Outcome o;
  std::vector<fa::RatingRecord> rs;
  const int v[] = {4, 4, 5, 4, 5, 4}, ar[] = {5, 4, 5, 4, 5, 4};
  for (int i = 0; i < 6; ++i) {
    fa::RatingRecord r;
    r.participant_id = fmt::format("p{}", i);
    r.stimulus_id = 55;
    r.sam_valence = v[i];
    r.sam_arousal = ar[i];
    rs.push_back(r);
  }
  const auto d = fa::stats::descriptives(rs).stimuli.at(0);
  const auto row = fmt::format("{:.2f}/{:.2f} {:.2f}/{:.2f}", d.mean_valence, d.mean_arousal, d.sd_valence.value_or(NAN),
                               d.sd_arousal.value_or(NAN));
  o.check(row == "4.33/4.50 0.52/0.55", "means/SDs " + row);
  return o;
}

// ---------------------------------------------------------------------------
// Pipeline criteria on the synthetic fixture corpus.

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = fa::csv::read_file(e.path());
  return files;
}

// extract -> design -> analyze under `root/out`, inputs under `root/in`.
std::map<std::string, std::string> pipeline(const fs::path& root, std::uint64_t seed) {
  fs::remove_all(root / "out");
  fa::app::ExtractOptions ex;
  ex.manifest = root / "in" / "manifest.csv";
  ex.out_dir = root / "out" / "extract";
  fa::app::run_extract(ex);

  fa::app::DesignOptions de;
  de.features = ex.out_dir / "features.csv";
  de.out_dir = root / "out" / "design";
  de.n_participants = 40;
  de.power_simulations = 100;
  de.seed = seed;
  fa::app::run_design(de);

  const auto plan = fa::load_plan(de.out_dir / "assignments.json");
  const auto ratings = fa::app::fixture::synthesize_ratings(plan, fa::load_features(*de.features), seed);
  fa::save_ratings(root / "out" / "ratings.csv", ratings);

  fa::app::AnalyzeOptions an;
  an.features = *de.features;
  an.ratings = root / "out" / "ratings.csv";
  an.out_dir = root / "out" / "analyze";
  an.seed = seed;
  an.n_bootstrap = 500;
  fa::app::run_analyze(an);
  return snapshot(root / "out");
}

Outcome determinism(const fs::path& root) {
  Outcome o;
  fa::app::fixture::write_corpus(root / "in", {30, 96, 72, 11});
  const auto first = pipeline(root, 42);
  const auto second = pipeline(root, 42);
  std::vector<std::string> differing;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) differing.push_back(name);
  }
  o.check(first.size() == second.size() && differing.empty() && first.size() > 20,
          fmt::format("{} files compared, {} differ{}", first.size(), differing.size(),
                      differing.empty() ? "" : " (first: " + differing.front() + ")"));
  return o;
}

// Rows of reference_comparison.csv with a computed value, keyed by quantity|granularity.
std::map<std::string, bool> reference_rows(const fs::path& file) {
  std::map<std::string, bool> rows;
  const auto table = fa::csv::read(file);
  for (std::size_t i = 1; i < table.size(); ++i) {
    const auto& cells = table[i];
    if (cells.size() != 5) continue;
    rows[cells[0] + "|" + cells[1]] = !cells[3].empty();
  }
  return rows;
}

Outcome conditional_replication(const fs::path& root) {
  Outcome o;
  fa::app::fixture::write_corpus(root / "corpus", {86, 96, 72, 3});
  fa::app::ExtractOptions ex;
  ex.manifest = root / "corpus" / "manifest.csv";
  ex.out_dir = root / "extract";
  const auto features = fa::app::run_extract(ex).features;

  fa::app::DesignOptions de;
  de.features = ex.out_dir / "features.csv";
  de.out_dir = root / "design";
  de.power_simulations = 0;
  de.seed = 9;
  const auto plan = *fa::app::run_design(de).plan;

  fa::save_ratings(root / "online.csv", fa::app::fixture::synthesize_ratings(plan, features, 9));
  std::vector<int> subset;
  for (int id = 1; id <= 15; ++id) subset.push_back(id);
  fa::app::fixture::AffectModel shifted;
  shifted.valence_shift = 0.4;
  fa::save_ratings(root / "field.csv", fa::app::fixture::synthesize_ratings(fa::app::fixture::complete_plan(subset, 19),
                                                                            features, 10, 5, shifted, false));

  fa::app::AnalyzeOptions an;
  an.features = *de.features;
  an.ratings = root / "online.csv";
  an.out_dir = root / "analyze";
  an.n_bootstrap = 1000;
  fa::app::run_analyze(an);

  fa::app::ValidateOptions va;
  va.online = root / "online.csv";
  va.field = root / "field.csv";
  va.features = *de.features;
  va.out_dir = root / "validate";
  fa::app::run_validate(va);

  auto expect_all = [&](const fs::path& file, const std::vector<fa::app::ReferenceValue>& refs, const char* label) {
    const auto rows = reference_rows(file);
    int present = 0, filled = 0;
    for (const auto& r : refs) {
      const auto it = rows.find(r.quantity + "|" + r.granularity);
      present += it != rows.end();
      filled += it != rows.end() && it->second;
    }
    o.check(present == static_cast<int>(refs.size()) && filled == present,
            fmt::format("{}: {}/{} reference quantities listed, {} computed", label, present, refs.size(), filled));
  };
  expect_all(an.out_dir / "reference_comparison.csv", fa::app::analyze_references(), "analyze");
  expect_all(va.out_dir / "reference_comparison.csv", fa::app::validate_references(), "validate");
  return o;
}

}  // namespace

int main() {
  fa::testing::TempDir scratch;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"fractal fixtures", fractal_fixtures},
      {"ratio metrics", ratio_metrics},
      {"design balance at 85 x 15 over 86 stimuli, 100 seeds", design_balance},
      {"power simulation", power},
      {"mixed-model recovery", lme_recovery},
      {"nonparametric and ICC oracles", nonparametric},
      {"mediation", mediation},
      {"descriptives for image 55", image_55},
      {"end-to-end determinism", [&] { return determinism(scratch / "determinism"); }},
      {"conditional replication table", [&] { return conditional_replication(scratch / "replication"); }},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.check(false, fmt::format("threw: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    failures += !o.pass;
    std::cout << fmt::format("{} {} [{:.2f}s] {}\n", o.pass ? "PASS" : "FAIL", name, secs, fmt::join(o.notes, "; "))
              << std::flush;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
                           criteria.size());
  return failures == 0 ? 0 : 1;
}
