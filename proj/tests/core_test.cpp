#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "facade_affect/core/io.hpp"
#include "test_support.hpp"

namespace facade_affect {
namespace {

using testing::TempDir;

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::string manifest_rows(int n) {
  std::string text = "stimulus_id,image_path,width_px,height_px,facade_mask_path,window_mask_path,material_mask_path\n";
  for (int i = 1; i <= n; ++i) text += fmt::format("{},img/{:03}.png,640,480,,,\n", i, i);
  return text;
}

RatingRecord make_rating(std::string pid, int sid, int pos = 1) {
  RatingRecord r;
  r.participant_id = std::move(pid);
  r.stimulus_id = sid;
  r.presentation_position = pos;
  r.perceived_complexity = 3;
  r.perceived_transparency = 2;
  r.materiality_category = MaterialCategory::natural;
  r.perceived_materiality = 1;
  r.sam_valence = 4;
  r.sam_arousal = 3;
  r.descriptors = {"warm", "ordered"};
  r.timestamp = "2024-05-01T10:00:00Z";
  return r;
}

TEST(Corpus, LoadsEightySixRows) {
  TempDir dir;
  write_text(dir / "manifest.csv", manifest_rows(86));
  auto records = load_corpus(dir / "manifest.csv");
  ASSERT_EQ(records.size(), 86u);
  EXPECT_EQ(records.front().stimulus_id, 1);
  EXPECT_EQ(records.back().stimulus_id, 86);
  EXPECT_EQ(records[4].image_path, (dir.path() / "img/005.png").lexically_normal().string());
  EXPECT_FALSE(records[4].facade_mask_path.has_value());
}

TEST(Corpus, EmptyManifestGivesEmptyList) {
  TempDir dir;
  write_text(dir / "header_only.csv", manifest_rows(0));
  write_text(dir / "blank.csv", "");
  EXPECT_TRUE(load_corpus(dir / "header_only.csv").empty());
  EXPECT_TRUE(load_corpus(dir / "blank.csv").empty());
}

TEST(Corpus, DuplicateIdIsRejectedWithId) {
  auto text = manifest_rows(12) + "11,img/dup.png,640,480,,,\n";
  try {
    parse_corpus(text);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate stimulus_id 11"), std::string::npos) << e.what();
  }
}

TEST(Corpus, RejectsSmallImagesAndBadFields) {
  const std::string header = "stimulus_id,image_path,width_px,height_px,facade_mask_path,window_mask_path,material_mask_path\n";
  EXPECT_THROW(parse_corpus(header + "1,a.png,15,480,,,\n"), ValidationError);
  EXPECT_THROW(parse_corpus(header + "1,a.png,x,480,,,\n"), ValidationError);
  EXPECT_THROW(parse_corpus(header + "0,a.png,64,64,,,\n"), ValidationError);
  EXPECT_THROW(parse_corpus(header + "1,a.png,64,64,,\n"), ValidationError);
  EXPECT_THROW(parse_corpus("stimulus_id,image_path\n1,a.png\n"), ValidationError);
  EXPECT_THROW(load_corpus("/nonexistent/manifest.csv"), IoError);
}

TEST(Ratings, LoadsFullDesignSizedFile) {
  std::vector<RatingRecord> ratings;
  for (int p = 1; p <= 85; ++p)
    for (int j = 0; j < 15; ++j) ratings.push_back(make_rating(fmt::format("P{:03}", p), (p * 7 + j) % 86 + 1, j + 1));
  auto loaded = parse_ratings(format_ratings(ratings), {});
  EXPECT_EQ(loaded.size(), 1275u);
  EXPECT_EQ(loaded, ratings);
}

TEST(Ratings, OutOfScaleValenceRejectedOnFivePointScale) {
  auto r = make_rating("p1", 1);
  r.sam_valence = 7;
  const auto text = format_ratings({r});
  EXPECT_THROW(parse_ratings(text, {5}), ValidationError);
  EXPECT_NO_THROW(parse_ratings(text, {9}));
  EXPECT_THROW(parse_ratings(text, {7}), ConfigError);
}

TEST(Ratings, DuplicatePairNamesThePair) {
  auto text = format_ratings({make_rating("p3", 12, 1), make_rating("p3", 13, 2), make_rating("p3", 12, 3)});
  try {
    parse_ratings(text, {});
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("(p3, 12)"), std::string::npos) << e.what();
  }
}

TEST(Ratings, DescriptorCountRules) {
  auto r = make_rating("p1", 1);
  r.descriptors = {};
  EXPECT_NO_THROW(parse_ratings(format_ratings({r}), {}));
  r.descriptors = {"one"};
  EXPECT_THROW(parse_ratings(format_ratings({r}), {}), ValidationError);
  r.descriptors = {"a", "b", "c", "d"};
  EXPECT_THROW(parse_ratings(format_ratings({r}), {}), ValidationError);
  r.descriptors = {"a", "a"};
  EXPECT_THROW(parse_ratings(format_ratings({r}), {}), ValidationError);

  std::vector<std::string> lexicon = {"warm", "ordered", "cold"};
  r.descriptors = {"warm", "cold"};
  EXPECT_NO_THROW(parse_ratings(format_ratings({r}), {5, &lexicon}));
  r.descriptors = {"warm", "noisy"};
  EXPECT_THROW(parse_ratings(format_ratings({r}), {5, &lexicon}), ValidationError);
}

TEST(Ratings, FieldErrorsNameTheField) {
  auto r = make_rating("p1", 1);
  r.sam_arousal = 0;
  r.timestamp = "yesterday";
  auto errs = field_errors(r, 5);
  ASSERT_EQ(errs.size(), 2u);
  EXPECT_EQ(errs[0].field, "sam_arousal");
  EXPECT_EQ(errs[1].field, "timestamp");
}

// Random records, some deliberately out of bounds. The loader must accept a
// one-row file exactly when the independent bounds predicate below holds.
TEST(Ratings, LoaderRejectsExactlyInvalidRecords) {
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> wide(-1, 11), narrow(1, 5);
  std::uniform_int_distribution<int> ndesc(0, 4);
  std::bernoulli_distribution in_range(0.93);
  std::uniform_int_distribution<int> coin(0, 9);
  const std::vector<std::string> pids = {"p1", "P-02", "bad id", "", "x_9"};
  const std::vector<std::string> stamps = {"2024-01-01T00:00:00Z", "2024-01-01T00:00:00.125Z", "2024-01-01 00:00:00",
                                           "2024-01-01T00:00:00"};
  int accepted = 0, rejected = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int scale_max = coin(rng) < 5 ? 5 : 9;
    auto value = [&](std::mt19937_64& g) { return in_range(g) ? narrow(g) : wide(g); };
    RatingRecord r;
    r.participant_id = pids[trial % pids.size()];
    r.stimulus_id = value(rng);
    r.presentation_position = value(rng);
    r.perceived_complexity = value(rng);
    r.perceived_transparency = value(rng);
    r.perceived_materiality = value(rng);
    r.materiality_category = static_cast<MaterialCategory>(trial % 3);
    r.sam_valence = value(rng);
    r.sam_arousal = value(rng);
    const int nd = ndesc(rng);
    for (int d = 0; d < nd; ++d) r.descriptors.push_back(fmt::format("w{}", d));
    r.timestamp = stamps[coin(rng) < 7 ? 0 : static_cast<std::size_t>(coin(rng)) % stamps.size()];

    auto in = [](int v, int hi) { return v >= 1 && v <= hi; };
    const bool valid = (r.participant_id == "p1" || r.participant_id == "P-02" || r.participant_id == "x_9") &&
                       r.stimulus_id >= 1 && r.presentation_position >= 1 && in(r.perceived_complexity, 5) &&
                       in(r.perceived_transparency, 5) && in(r.perceived_materiality, 5) &&
                       in(r.sam_valence, scale_max) && in(r.sam_arousal, scale_max) &&
                       (nd == 0 || nd == 2 || nd == 3) && r.timestamp.back() == 'Z' && r.timestamp[10] == 'T';
    bool loaded = true;
    try {
      parse_ratings(format_ratings({r}), {scale_max});
    } catch (const ValidationError&) {
      loaded = false;
    }
    ASSERT_EQ(loaded, valid) << "trial " << trial;
    (valid ? accepted : rejected)++;
  }
  EXPECT_GT(accepted, 10);
  EXPECT_GT(rejected, 10);
}

TEST(RoundTrip, GeneratedCorpusAndRatings) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    TempDir dir;
    std::vector<StimulusRecord> corpus;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      StimulusRecord s;
      s.stimulus_id = i * 3 + 1;
      s.image_path = (dir.path() / fmt::format("im, \"{}\".png", i)).string();
      s.width_px = 16 + static_cast<int>(rng() % 2000);
      s.height_px = 16 + static_cast<int>(rng() % 2000);
      if (rng() % 2) s.facade_mask_path = (dir.path() / fmt::format("f{}.png", i)).string();
      if (rng() % 2) s.window_mask_path = (dir.path() / fmt::format("w{}.png", i)).string();
      if (rng() % 2) s.material_mask_path = (dir.path() / fmt::format("m{}.png", i)).string();
      corpus.push_back(s);
    }
    save_corpus(dir / "manifest.csv", corpus);
    EXPECT_EQ(load_corpus(dir / "manifest.csv"), corpus);

    std::vector<RatingRecord> ratings;
    for (int i = 0; i < n; ++i) {
      auto r = make_rating(fmt::format("p{}", rng() % 5), corpus[i].stimulus_id, i + 1);
      r.sam_valence = 1 + static_cast<int>(rng() % 9);
      r.descriptors = rng() % 2 ? std::vector<std::string>{"calm", "grey", "tall"} : std::vector<std::string>{};
      ratings.push_back(r);
    }
    save_ratings(dir / "ratings.csv", ratings);
    EXPECT_EQ(load_ratings(dir / "ratings.csv", 9), ratings);
  }
}

TEST(RoundTrip, FeaturesKeepAbsentMateriality) {
  std::vector<FeatureScores> features = {
      {1, 0.08, 1.4321, 0.4321, 0.07, std::nullopt, 1.4, 0.1, 0.3},
      {2, 0.72, 1.9, 0.9, 0.62, 0.93, 1.4, 0.1, 0.3},
      {3, 0.1 + 0.2, 1.0, 0.0, 0.0, 0.0, 2.0, 0.05, 0.2},
  };
  const auto text = format_features(features);
  EXPECT_NE(text.find("\n1,0.08,1.4321,0.4321,0.07,,1.4,0.1,0.3\n"), std::string::npos) << text;
  EXPECT_EQ(parse_features(text), features);
}

TEST(Features, RejectsOutOfBoundsScores) {
  std::vector<FeatureScores> bad = {{1, 1.2, 1.5, 0.5, 0.1, std::nullopt, 1.4, 0.1, 0.3}};
  EXPECT_THROW(parse_features(format_features(bad)), ValidationError);
  bad = {{1, 0.2, 2.3, 1.0, 0.1, std::nullopt, 1.4, 0.1, 0.3}};
  EXPECT_THROW(parse_features(format_features(bad)), ValidationError);
}

TEST(Plan, JsonRoundTripPreservesParticipantOrder) {
  AssignmentPlan plan;
  plan.seed = 0xFFFFFFFFFFFFFFFFULL;
  plan.block_size_k = 3;
  plan.assignments = {{"P010", {5, 9, 2}}, {"P002", {1, 2, 3}}};
  TempDir dir;
  save_plan(dir / "plan.json", plan);
  EXPECT_EQ(load_plan(dir / "plan.json"), plan);
  auto j = plan_to_json(plan);
  EXPECT_EQ(j["assignments"].begin().key(), "P010");
}

TEST(Plan, RejectsWrongBlockSizeAndRepeats) {
  nlohmann::ordered_json j = {{"seed", 1}, {"block_size_k", 3}, {"assignments", {{"p1", {1, 2}}}}};
  EXPECT_THROW(plan_from_json(j), ValidationError);
  j["assignments"]["p1"] = {1, 1, 2};
  EXPECT_THROW(plan_from_json(j), ValidationError);
  j.erase("seed");
  EXPECT_THROW(plan_from_json(j), ValidationError);
}

TEST(Participants, UniqueIdsAndConditions) {
  std::vector<ParticipantRecord> ps = {{"p1", {{"age_band", "25-34"}}, Condition::online},
                                       {"p2", {}, Condition::field}};
  EXPECT_NO_THROW(validate_participants(ps));
  ps.push_back({"p1", {}, Condition::field});
  EXPECT_THROW(validate_participants(ps), ValidationError);
  EXPECT_EQ(parse_condition("field"), Condition::field);
  EXPECT_FALSE(parse_condition("lab").has_value());
}

TEST(Csv, QuotedFieldsAndBlankLines) {
  auto rows = csv::parse("a,\"b,c\",\"d\"\"e\"\r\n\n1,,3\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (csv::Row{"a", "b,c", "d\"e"}));
  EXPECT_EQ(rows[1], (csv::Row{"1", "", "3"}));
  EXPECT_THROW(csv::parse("\"open"), ValidationError);
}

}  // namespace
}  // namespace facade_affect
