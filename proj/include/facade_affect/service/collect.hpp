#pragma once

// Survey session state and durable rating storage behind the HTTP API.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "facade_affect/core/csv.hpp"
#include "facade_affect/core/error.hpp"
#include "facade_affect/core/io.hpp"
#include "facade_affect/core/types.hpp"

namespace facade_affect::service {

// Stand-in descriptor list. It is not a validated lexicon; replace it via configuration.
inline std::vector<std::string> placeholder_lexicon() {
  return {"calm", "lively", "monotonous", "inviting", "cold", "warm", "busy", "elegant", "harsh", "harmonious",
          "heavy", "light"};
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct ServiceConfig {
  std::filesystem::path ratings_log;
  int scale_max = 5;
  std::vector<std::string> lexicon = placeholder_lexicon();
  bool lexicon_is_placeholder = true;
  bool allow_empty_descriptors = false;
  std::function<std::string()> clock = utc_now;
};

struct SessionState {
  std::string participant_id;
  std::vector<int> assignment;
  int cursor = 0;
  bool completed = false;
};

struct NextStimulus {
  bool completed = false;
  int cursor = 0;
  int block_size_k = 0;
  int stimulus_id = 0;  // 0 when completed
  int presentation_position = 0;
};

enum class SubmitStatus { accepted, conflict, invalid, unknown_participant };

struct SubmitResult {
  SubmitStatus status = SubmitStatus::invalid;
  int cursor = 0;
  bool completed = false;
  std::optional<int> expected_stimulus_id;  // set on conflict when the session is still open
  std::vector<FieldError> errors;           // set when invalid
};

inline nlohmann::json rating_to_json(const RatingRecord& r) {
  return {{"participant_id", r.participant_id},
          {"stimulus_id", r.stimulus_id},
          {"presentation_position", r.presentation_position},
          {"perceived_complexity", r.perceived_complexity},
          {"perceived_transparency", r.perceived_transparency},
          {"materiality_category", to_string(r.materiality_category)},
          {"perceived_materiality", r.perceived_materiality},
          {"sam_valence", r.sam_valence},
          {"sam_arousal", r.sam_arousal},
          {"descriptors", r.descriptors},
          {"timestamp", r.timestamp}};
}

// Reads a rating payload. Missing or mistyped fields become field errors; value
// checks are left to the caller.
inline RatingRecord rating_from_json(const nlohmann::json& j, std::vector<FieldError>& errors) {
  RatingRecord r;
  if (!j.is_object()) {
    errors.push_back({"body", "must be a JSON object"});
    return r;
  }
  auto get_int = [&](const char* name, int& dst, bool required) {
    auto it = j.find(name);
    if (it == j.end()) {
      if (required) errors.push_back({name, "required"});
      return;
    }
    if (!it->is_number_integer() || *it < std::numeric_limits<int>::min() || *it > std::numeric_limits<int>::max()) {
      errors.push_back({name, "must be an integer"});
      return;
    }
    dst = it->get<int>();
  };
  auto get_string = [&](const char* name, std::string& dst, bool required) {
    auto it = j.find(name);
    if (it == j.end()) {
      if (required) errors.push_back({name, "required"});
      return;
    }
    if (!it->is_string()) {
      errors.push_back({name, "must be a string"});
      return;
    }
    dst = it->get<std::string>();
  };
  get_string("participant_id", r.participant_id, false);
  get_int("stimulus_id", r.stimulus_id, true);
  get_int("presentation_position", r.presentation_position, false);
  get_int("perceived_complexity", r.perceived_complexity, true);
  get_int("perceived_transparency", r.perceived_transparency, true);
  get_int("perceived_materiality", r.perceived_materiality, true);
  get_int("sam_valence", r.sam_valence, true);
  get_int("sam_arousal", r.sam_arousal, true);
  std::string category;
  get_string("materiality_category", category, true);
  if (j.contains("materiality_category") && j["materiality_category"].is_string()) {
    if (auto c = parse_material_category(category))
      r.materiality_category = *c;
    else
      errors.push_back({"materiality_category", "must be natural, artificial or mixed"});
  }
  if (auto it = j.find("descriptors"); it == j.end()) {
    errors.push_back({"descriptors", "required"});
  } else if (!it->is_array() || !std::all_of(it->begin(), it->end(), [](const auto& v) { return v.is_string(); })) {
    errors.push_back({"descriptors", "must be an array of strings"});
  } else {
    r.descriptors = it->get<std::vector<std::string>>();
  }
  get_string("timestamp", r.timestamp, false);
  return r;
}

// Append-only CSV file; every append is flushed to disk before returning.
class RatingLog {
public:
  explicit RatingLog(std::filesystem::path path) : path_(std::move(path)) {}
  RatingLog(const RatingLog&) = delete;
  RatingLog& operator=(const RatingLog&) = delete;
  ~RatingLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  // Returns the existing contents (torn trailing line removed) and opens for appending.
  std::string open(std::vector<std::string>& warnings) {
    namespace fs = std::filesystem;
    std::string text;
    if (fs::exists(path_)) {
      text = csv::read_file(path_);
      if (!text.empty() && text.back() != '\n') {
        const auto cut = text.rfind('\n');
        const std::size_t keep = cut == std::string::npos ? 0 : cut + 1;
        warnings.push_back(fmt::format("ratings log ended in a partial line ({} bytes), discarded", text.size() - keep));
        text.resize(keep);
        fs::resize_file(path_, keep);
      }
    } else if (path_.has_parent_path()) {
      fs::create_directories(path_.parent_path());
    }
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw IoError(fmt::format("cannot open ratings log {}: {}", path_.string(), std::strerror(errno)));
    if (text.empty()) append(ratings_header());
    return text;
  }

  void append(std::string_view line) {
    std::size_t done = 0;
    while (done < line.size()) {
      const auto n = ::write(fd_, line.data() + done, line.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw IoError(fmt::format("write to ratings log failed: {}", std::strerror(errno)));
      }
      done += static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw IoError(fmt::format("fsync of ratings log failed: {}", std::strerror(errno)));
  }

  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
  int fd_ = -1;
};

class CollectService {
public:
  CollectService(AssignmentPlan plan, ServiceConfig cfg) : plan_(std::move(plan)), cfg_(std::move(cfg)), log_(cfg_.ratings_log) {
    check_scale_max(cfg_.scale_max);
    validate_plan(plan_);
    for (const auto& a : plan_.assignments) sessions_.emplace(a.participant_id, std::make_unique<Session>(a));
    replay(log_.open(warnings_));
  }

  const AssignmentPlan& plan() const { return plan_; }
  const ServiceConfig& config() const { return cfg_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::optional<SessionState> session(std::string_view pid) const {
    auto* s = find(pid);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mutex);
    return SessionState{s->assignment.participant_id, s->assignment.stimuli, s->cursor, s->completed()};
  }

  // Stimulus at the cursor, without advancing. nullopt for an unknown participant.
  std::optional<NextStimulus> next(std::string_view pid) const {
    auto* s = find(pid);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mutex);
    NextStimulus n;
    n.cursor = s->cursor;
    n.block_size_k = static_cast<int>(s->assignment.stimuli.size());
    n.completed = s->completed();
    if (!n.completed) {
      n.stimulus_id = s->assignment.stimuli[static_cast<std::size_t>(s->cursor)];
      n.presentation_position = s->cursor + 1;
    }
    return n;
  }

  // Validates, appends durably, then advances the cursor. The session lock is held
  // across all three so concurrent submissions for one participant serialise.
  SubmitResult submit(std::string_view pid, const nlohmann::json& payload) {
    SubmitResult res;
    auto* s = find(pid);
    if (!s) {
      res.status = SubmitStatus::unknown_participant;
      return res;
    }
    std::lock_guard lock(s->mutex);
    res.cursor = s->cursor;
    res.completed = s->completed();

    std::vector<FieldError> errors;
    RatingRecord r = rating_from_json(payload, errors);
    const bool have_stimulus =
        payload.is_object() && payload.contains("stimulus_id") && payload["stimulus_id"].is_number_integer();
    if (s->completed() || (have_stimulus && r.stimulus_id != s->current())) {
      res.status = SubmitStatus::conflict;
      if (!s->completed()) res.expected_stimulus_id = s->current();
      return res;
    }
    if (!payload.is_object() || !payload.contains("participant_id")) {
      r.participant_id = std::string(pid);
    } else if (r.participant_id != pid) {
      errors.push_back({"participant_id", "does not match the session"});
    }
    if (!payload.is_object() || !payload.contains("presentation_position")) {
      r.presentation_position = s->cursor + 1;
    } else if (r.presentation_position != s->cursor + 1) {
      errors.push_back({"presentation_position", fmt::format("expected {}", s->cursor + 1)});
    }
    if (!payload.is_object() || !payload.contains("timestamp")) r.timestamp = cfg_.clock();
    if (errors.empty()) {
      auto value_errors = field_errors(r, cfg_.scale_max, &cfg_.lexicon, cfg_.allow_empty_descriptors);
      errors.insert(errors.end(), value_errors.begin(), value_errors.end());
    }
    if (!errors.empty()) {
      res.status = SubmitStatus::invalid;
      res.errors = std::move(errors);
      return res;
    }

    {
      std::lock_guard log_lock(log_mutex_);
      log_.append(csv::format_row(rating_to_row(r)));
      records_.push_back(r);
    }
    ++s->cursor;
    res.status = SubmitStatus::accepted;
    res.cursor = s->cursor;
    res.completed = s->completed();
    return res;
  }

  SubmitResult submit(std::string_view pid, const RatingRecord& r) { return submit(pid, rating_to_json(r)); }

  // Accepted ratings in acknowledgement order, in the ratings file schema.
  std::string export_csv() const {
    std::lock_guard lock(log_mutex_);
    return format_ratings(records_);
  }

  std::size_t rating_count() const {
    std::lock_guard lock(log_mutex_);
    return records_.size();
  }

private:
  struct Session {
    explicit Session(ParticipantAssignment a) : assignment(std::move(a)) {}
    ParticipantAssignment assignment;
    int cursor = 0;
    mutable std::mutex mutex;

    bool completed() const { return cursor >= static_cast<int>(assignment.stimuli.size()); }
    int current() const { return assignment.stimuli[static_cast<std::size_t>(cursor)]; }
  };

  Session* find(std::string_view pid) const {
    auto it = sessions_.find(std::string(pid));
    return it == sessions_.end() ? nullptr : it->second.get();
  }

  void replay(const std::string& text) {
    // No lexicon check here: the log may predate a lexicon change.
    auto records = parse_ratings(text, {cfg_.scale_max, nullptr});
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      auto* s = find(r.participant_id);
      if (!s)
        throw ValidationError(fmt::format("ratings log row {}: participant '{}' is not in the plan", i + 1, r.participant_id));
      if (s->completed() || r.stimulus_id != s->current() || r.presentation_position != s->cursor + 1)
        throw ValidationError(fmt::format("ratings log row {}: ({}, {}) does not follow the plan order", i + 1,
                                          r.participant_id, r.stimulus_id));
      ++s->cursor;
    }
    records_ = std::move(records);
  }

  AssignmentPlan plan_;
  ServiceConfig cfg_;
  RatingLog log_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  mutable std::mutex log_mutex_;
  std::vector<RatingRecord> records_;
  std::vector<std::string> warnings_;
};

}  // namespace facade_affect::service
