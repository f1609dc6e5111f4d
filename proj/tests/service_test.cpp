#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "facade_affect/app/fixture.hpp"
#include "facade_affect/core/io.hpp"
#include "facade_affect/design/assignment.hpp"
#include "facade_affect/design/stratify.hpp"
#include "facade_affect/service/http.hpp"
#include "test_support.hpp"

namespace facade_affect::service {
namespace {

using testing::TempDir;

AssignmentPlan small_plan() { return app::fixture::complete_plan({4, 7, 9}, 2, "P"); }

ServiceConfig config_for(const std::filesystem::path& log) {
  ServiceConfig cfg;
  cfg.ratings_log = log;
  cfg.clock = [] { return std::string("2024-06-01T12:00:00Z"); };
  return cfg;
}

nlohmann::json payload(int stimulus_id) {
  return {{"stimulus_id", stimulus_id},
          {"perceived_complexity", 3},
          {"perceived_transparency", 2},
          {"materiality_category", "natural"},
          {"perceived_materiality", 4},
          {"sam_valence", 4},
          {"sam_arousal", 2},
          {"descriptors", {"calm", "warm"}}};
}

std::string file_bytes(const std::filesystem::path& p) { return csv::read_file(p); }

TEST(CollectService, NextDoesNotAdvance) {
  TempDir dir;
  CollectService svc(small_plan(), config_for(dir / "log.csv"));
  auto a = svc.next("P01"), b = svc.next("P01");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->stimulus_id, 4);
  EXPECT_EQ(a->presentation_position, 1);
  EXPECT_EQ(a->block_size_k, 3);
  EXPECT_EQ(b->stimulus_id, a->stimulus_id);
  EXPECT_EQ(b->cursor, 0);
  EXPECT_EQ(svc.next("P02")->stimulus_id, 7);
  EXPECT_FALSE(svc.next("nobody"));
  EXPECT_EQ(svc.submit("nobody", payload(4)).status, SubmitStatus::unknown_participant);
}

TEST(CollectService, AcceptsInOrderAndMarksCompletion) {
  TempDir dir;
  CollectService svc(small_plan(), config_for(dir / "log.csv"));
  for (int sid : {4, 7, 9}) {
    const auto r = svc.submit("P01", payload(sid));
    ASSERT_EQ(r.status, SubmitStatus::accepted) << sid;
  }
  const auto n = svc.next("P01");
  EXPECT_TRUE(n->completed);
  EXPECT_EQ(n->cursor, 3);
  EXPECT_EQ(n->stimulus_id, 0);
  EXPECT_TRUE(svc.session("P01")->completed);
  const auto rows = parse_ratings(svc.export_csv(), {});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].presentation_position, 3);
  EXPECT_EQ(rows[0].timestamp, "2024-06-01T12:00:00Z");
  EXPECT_EQ(rows[0].participant_id, "P01");
}

TEST(CollectService, InvalidPayloadNamesEveryField) {
  TempDir dir;
  CollectService svc(small_plan(), config_for(dir / "log.csv"));
  const auto before = file_bytes(dir / "log.csv");
  auto p = payload(4);
  p["sam_valence"] = 6;
  p["descriptors"] = {"calm"};
  p.erase("perceived_complexity");
  const auto r = svc.submit("P01", p);
  ASSERT_EQ(r.status, SubmitStatus::invalid);
  std::set<std::string> fields;
  for (const auto& e : r.errors) fields.insert(e.field);
  EXPECT_TRUE(fields.count("perceived_complexity"));
  EXPECT_EQ(svc.next("P01")->cursor, 0);
  EXPECT_EQ(file_bytes(dir / "log.csv"), before);

  p = payload(4);
  p["sam_valence"] = 6;
  p["descriptors"] = {"calm"};
  std::set<std::string> value_fields;
  for (const auto& e : svc.submit("P01", p).errors) value_fields.insert(e.field);
  EXPECT_EQ(value_fields, (std::set<std::string>{"sam_valence", "descriptors"}));

  p = payload(4);
  p["descriptors"] = {"calm", "not-in-lexicon"};
  EXPECT_EQ(svc.submit("P01", p).status, SubmitStatus::invalid);
  p = payload(4);
  p["participant_id"] = "P02";
  EXPECT_EQ(svc.submit("P01", p).errors.at(0).field, "participant_id");
  p = payload(4);
  p["presentation_position"] = 2;
  EXPECT_EQ(svc.submit("P01", p).errors.at(0).field, "presentation_position");
  EXPECT_EQ(svc.submit("P01", nlohmann::json::array()).status, SubmitStatus::invalid);
  EXPECT_EQ(file_bytes(dir / "log.csv"), before);
}

TEST(CollectService, EmptyDescriptorsOnlyWhenAllowed) {
  TempDir dir;
  auto p = payload(4);
  p["descriptors"] = nlohmann::json::array();
  {
    CollectService svc(small_plan(), config_for(dir / "a.csv"));
    EXPECT_EQ(svc.submit("P01", p).status, SubmitStatus::invalid);
  }
  auto cfg = config_for(dir / "b.csv");
  cfg.allow_empty_descriptors = true;
  CollectService field(small_plan(), cfg);
  EXPECT_EQ(field.submit("P01", p).status, SubmitStatus::accepted);
}

TEST(CollectService, ConflictLeavesLogUnchanged) {
  TempDir dir;
  CollectService svc(small_plan(), config_for(dir / "log.csv"));
  ASSERT_EQ(svc.submit("P01", payload(4)).status, SubmitStatus::accepted);
  const auto before = file_bytes(dir / "log.csv");
  // Retrying the acknowledged rating, and skipping ahead, both conflict.
  auto retry = svc.submit("P01", payload(4));
  EXPECT_EQ(retry.status, SubmitStatus::conflict);
  EXPECT_EQ(retry.expected_stimulus_id, 7);
  EXPECT_EQ(retry.cursor, 1);
  EXPECT_EQ(svc.submit("P01", payload(9)).status, SubmitStatus::conflict);
  EXPECT_EQ(file_bytes(dir / "log.csv"), before);

  svc.submit("P01", payload(7));
  svc.submit("P01", payload(9));
  const auto done = svc.submit("P01", payload(9));
  EXPECT_EQ(done.status, SubmitStatus::conflict);
  EXPECT_TRUE(done.completed);
  EXPECT_FALSE(done.expected_stimulus_id);
}

TEST(CollectService, RestartReplaysTheLog) {
  TempDir dir;
  std::string exported;
  {
    CollectService svc(small_plan(), config_for(dir / "log.csv"));
    svc.submit("P01", payload(4));
    svc.submit("P02", payload(7));
    svc.submit("P01", payload(7));
    exported = svc.export_csv();
  }
  CollectService again(small_plan(), config_for(dir / "log.csv"));
  EXPECT_TRUE(again.warnings().empty());
  EXPECT_EQ(again.next("P01")->stimulus_id, 9);
  EXPECT_EQ(again.next("P02")->stimulus_id, 9);
  EXPECT_EQ(again.export_csv(), exported);
  EXPECT_EQ(file_bytes(dir / "log.csv"), exported);
}

TEST(CollectService, TornTrailingLineIsDiscarded) {
  TempDir dir;
  {
    CollectService svc(small_plan(), config_for(dir / "log.csv"));
    svc.submit("P01", payload(4));
  }
  const auto intact = file_bytes(dir / "log.csv");
  {
    std::ofstream out(dir / "log.csv", std::ios::app | std::ios::binary);
    out << "P01,7,2,3,2,nat";
  }
  CollectService svc(small_plan(), config_for(dir / "log.csv"));
  ASSERT_EQ(svc.warnings().size(), 1u);
  EXPECT_NE(svc.warnings()[0].find("partial line"), std::string::npos);
  EXPECT_EQ(file_bytes(dir / "log.csv"), intact);
  EXPECT_EQ(svc.next("P01")->stimulus_id, 7);
  EXPECT_EQ(svc.submit("P01", payload(7)).status, SubmitStatus::accepted);
  EXPECT_EQ(parse_ratings(file_bytes(dir / "log.csv"), {}).size(), 2u);
}

TEST(CollectService, LogThatBreaksPlanOrderIsRejected) {
  TempDir dir;
  {
    CollectService svc(small_plan(), config_for(dir / "log.csv"));
    svc.submit("P01", payload(4));
  }
  auto reordered = small_plan();
  std::swap(reordered.assignments[0].stimuli[0], reordered.assignments[0].stimuli[1]);
  EXPECT_THROW(CollectService(reordered, config_for(dir / "log.csv")), ValidationError);
  auto fewer = small_plan();
  fewer.assignments.erase(fewer.assignments.begin());
  EXPECT_THROW(CollectService(fewer, config_for(dir / "log.csv")), ValidationError);
}

TEST(CollectService, ConcurrentSubmissionsHaveOneWinnerPerPosition) {
  TempDir dir;
  const auto plan = app::fixture::complete_plan({1, 2, 3, 4, 5, 6}, 3, "C");
  CollectService svc(plan, config_for(dir / "log.csv"));
  for (std::size_t pos = 0; pos < 6; ++pos) {
    std::atomic<int> accepted{0}, conflicts{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&, t] {
        const auto& a = plan.assignments[static_cast<std::size_t>(t % 3)];
        const auto r = svc.submit(a.participant_id, payload(a.stimuli[pos]));
        if (r.status == SubmitStatus::accepted) ++accepted;
        if (r.status == SubmitStatus::conflict) ++conflicts;
      });
    for (auto& th : threads) th.join();
    EXPECT_EQ(accepted.load(), 3) << pos;  // one per participant
    EXPECT_EQ(conflicts.load(), 5) << pos;
  }
  const auto rows = parse_ratings(file_bytes(dir / "log.csv"), {});
  ASSERT_EQ(rows.size(), 18u);
  std::map<std::string, int> last_position;
  for (const auto& r : rows) {
    EXPECT_EQ(r.presentation_position, last_position[r.participant_id] + 1);
    last_position[r.participant_id] = r.presentation_position;
  }
}

TEST(CollectService, ExportIsStable) {
  TempDir dir;
  CollectService svc(small_plan(), config_for(dir / "log.csv"));
  EXPECT_EQ(svc.export_csv(), ratings_header());
  svc.submit("P02", payload(7));
  svc.submit("P01", payload(4));
  const auto a = svc.export_csv(), b = svc.export_csv();
  EXPECT_EQ(a, b);
  EXPECT_EQ(parse_ratings(a, {}).size(), 2u);
  EXPECT_EQ(parse_ratings(a, {})[0].participant_id, "P02");
}

// ---------------------------------------------------------------------------
// HTTP

class HttpFixture : public ::testing::Test {
protected:
  void start(AssignmentPlan plan, HttpOptions opts = {}) {
    svc_ = std::make_unique<CollectService>(std::move(plan), config_for(dir_ / "log.csv"));
    mount_routes(server_, *svc_, std::move(opts));
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  httplib::Result post(const std::string& pid, const nlohmann::json& body) {
    return client_->Post("/api/session/" + pid + "/rating", body.dump(), "application/json");
  }

  TempDir dir_;
  std::unique_ptr<CollectService> svc_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpFixture, SessionRoutes) {
  start(small_plan());
  auto next = client_->Get("/api/session/P01/next");
  ASSERT_TRUE(next);
  EXPECT_EQ(next->status, 200);
  auto j = nlohmann::json::parse(next->body);
  EXPECT_EQ(j["stimulus"]["stimulus_id"], 4);
  EXPECT_EQ(j["stimulus"]["image_url"], "/stimuli/4");
  EXPECT_EQ(j["scale"]["sam_max"], 5);
  EXPECT_TRUE(j["descriptor_lexicon_placeholder"].get<bool>());
  EXPECT_EQ(client_->Get("/api/session/ghost/next")->status, 404);

  auto ok = post("P01", payload(4));
  EXPECT_EQ(ok->status, 200);
  EXPECT_EQ(nlohmann::json::parse(ok->body)["cursor"], 1);

  auto conflict = post("P01", payload(4));
  EXPECT_EQ(conflict->status, 409);
  EXPECT_EQ(nlohmann::json::parse(conflict->body)["expected_stimulus_id"], 7);

  auto bad = payload(7);
  bad["sam_arousal"] = 0;
  bad["perceived_transparency"] = "high";
  auto invalid = post("P01", bad);
  EXPECT_EQ(invalid->status, 422);
  std::set<std::string> fields;
  const auto body = nlohmann::json::parse(invalid->body);
  for (const auto& f : body["fields"]) fields.insert(f["field"].get<std::string>());
  EXPECT_TRUE(fields.count("perceived_transparency"));

  EXPECT_EQ(client_->Post("/api/session/P01/rating", "{not json", "application/json")->status, 400);
  EXPECT_EQ(post("ghost", payload(4))->status, 404);

  auto health = nlohmann::json::parse(client_->Get("/api/health")->body);
  EXPECT_EQ(health["ratings"], 1);
  EXPECT_EQ(health["participants"], 2);

  auto exported = client_->Get("/api/export");
  EXPECT_EQ(exported->status, 200);
  EXPECT_EQ(exported->get_header_value("Content-Type"), "text/csv");
  EXPECT_EQ(exported->body, svc_->export_csv());
  EXPECT_EQ(client_->Get("/api/export")->body, exported->body);
}

TEST_F(HttpFixture, StaticUiAndStimulusImages) {
  std::filesystem::create_directories(dir_ / "ui");
  {
    std::ofstream(dir_ / "ui" / "index.html") << "<!doctype html><title>survey</title>";
  }
  vision::save_rgb(dir_ / "s4.png", vision::RgbImage(4, 3, {10, 20, 30}));
  HttpOptions opts;
  opts.ui_dir = dir_ / "ui";
  opts.stimulus_images[4] = dir_ / "s4.png";
  opts.stimulus_images[7] = dir_ / "missing.png";
  start(small_plan(), opts);

  auto index = client_->Get("/ui/index.html");
  ASSERT_TRUE(index);
  EXPECT_EQ(index->status, 200);
  EXPECT_NE(index->body.find("survey"), std::string::npos);
  auto root = client_->Get("/");
  EXPECT_EQ(root->status, 302);
  EXPECT_EQ(root->get_header_value("Location"), "/ui/index.html");

  auto image = client_->Get("/stimuli/4");
  EXPECT_EQ(image->status, 200);
  EXPECT_EQ(image->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(image->body, csv::read_file(dir_ / "s4.png"));
  EXPECT_EQ(client_->Get("/stimuli/7")->status, 404);
  EXPECT_EQ(client_->Get("/stimuli/99")->status, 404);
}

TEST(Http, MissingUiDirectoryIsAnIoError) {
  TempDir dir;
  CollectService svc(small_plan(), config_for(dir / "log.csv"));
  httplib::Server server;
  HttpOptions opts;
  opts.ui_dir = dir / "absent";
  EXPECT_THROW(mount_routes(server, svc, opts), IoError);
}

// 85 scripted sessions over HTTP; the export must satisfy the design's replication check.
TEST_F(HttpFixture, FullLoopExportKeepsDesignBalance) {
  const auto features = testing::synthetic_features(86, 7);
  const auto strata = design::stratify(features);
  const auto plan = design::generate_assignments(strata, 85, 15, 12, 3);
  start(plan);
  const auto scripted = app::fixture::synthesize_ratings(plan, features, 5);
  std::size_t i = 0;
  for (const auto& a : plan.assignments) {
    for (std::size_t pos = 0; pos < a.stimuli.size(); ++pos, ++i) {
      auto next = nlohmann::json::parse(client_->Get("/api/session/" + a.participant_id + "/next")->body);
      ASSERT_EQ(next["stimulus"]["stimulus_id"], scripted[i].stimulus_id);
      auto body = rating_to_json(scripted[i]);
      body.erase("participant_id");
      ASSERT_EQ(post(a.participant_id, body)->status, 200) << a.participant_id << " " << pos;
    }
    EXPECT_TRUE(nlohmann::json::parse(client_->Get("/api/session/" + a.participant_id + "/next")->body)["completed"]);
  }
  const auto rows = parse_ratings(client_->Get("/api/export")->body, {});
  ASSERT_EQ(rows.size(), 1275u);
  const auto counts = design::replication_counts(rows);
  int lo = 1 << 30, hi = 0;
  for (int id : strata.stimulus_ids) {
    const int n = counts.count(id) ? counts.at(id) : 0;
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  EXPECT_GE(lo, 12);
  EXPECT_LE(hi - lo, 2);
}

}  // namespace
}  // namespace facade_affect::service
