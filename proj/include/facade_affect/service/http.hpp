#pragma once

// HTTP+JSON front end for CollectService.
//
//   GET  /api/session/{pid}/next    stimulus at the cursor, or a completion marker
//   POST /api/session/{pid}/rating  submit the rating for the cursor stimulus
//   GET  /api/export                ratings CSV
//   GET  /api/health
//   GET  /stimuli/{id}              stimulus image from the corpus manifest
//   GET  /ui/...                    static survey UI bundle, when a directory is given

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "facade_affect/core/csv.hpp"
#include "facade_affect/core/types.hpp"
#include "facade_affect/service/collect.hpp"

namespace facade_affect::service {

struct HttpOptions {
  std::map<int, std::filesystem::path> stimulus_images;
  std::optional<std::filesystem::path> ui_dir;
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

}  // namespace detail

inline nlohmann::json next_to_json(const CollectService& svc, const std::string& pid, const NextStimulus& n) {
  nlohmann::json j{{"participant_id", pid},
                   {"completed", n.completed},
                   {"cursor", n.cursor},
                   {"block_size_k", n.block_size_k}};
  if (!n.completed) {
    j["stimulus"] = {{"stimulus_id", n.stimulus_id}, {"image_url", fmt::format("/stimuli/{}", n.stimulus_id)}};
    j["presentation_position"] = n.presentation_position;
  }
  const auto& cfg = svc.config();
  j["scale"] = {{"sam_min", 1}, {"sam_max", cfg.scale_max}, {"percept_min", 1}, {"percept_max", kPerceptScaleMax}};
  j["descriptor_lexicon"] = cfg.lexicon;
  j["descriptor_lexicon_placeholder"] = cfg.lexicon_is_placeholder;
  j["descriptor_count"] = {{"allowed", cfg.allow_empty_descriptors ? nlohmann::json{0, 2, 3} : nlohmann::json{2, 3}}};
  j["materiality_categories"] = {"natural", "artificial", "mixed"};
  return j;
}

inline void mount_routes(httplib::Server& server, CollectService& svc, HttpOptions opts = {}) {
  using httplib::Request;
  using httplib::Response;

  server.Get(R"(/api/session/([A-Za-z0-9_-]+)/next)", [&svc](const Request& req, Response& res) {
    const std::string pid = req.matches[1];
    const auto n = svc.next(pid);
    if (!n) return detail::send_json(res, 404, {{"error", "unknown participant"}, {"participant_id", pid}});
    detail::send_json(res, 200, next_to_json(svc, pid, *n));
  });

  server.Post(R"(/api/session/([A-Za-z0-9_-]+)/rating)", [&svc](const Request& req, Response& res) {
    const std::string pid = req.matches[1];
    const auto body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded())
      return detail::send_json(res, 400, {{"error", "body is not valid JSON"}});
    const auto r = svc.submit(pid, body);
    switch (r.status) {
      case SubmitStatus::unknown_participant:
        return detail::send_json(res, 404, {{"error", "unknown participant"}, {"participant_id", pid}});
      case SubmitStatus::conflict: {
        nlohmann::json j{{"error", "conflict"}, {"cursor", r.cursor}, {"completed", r.completed}};
        if (r.expected_stimulus_id) j["expected_stimulus_id"] = *r.expected_stimulus_id;
        return detail::send_json(res, 409, j);
      }
      case SubmitStatus::invalid: {
        auto fields = nlohmann::json::array();
        for (const auto& e : r.errors) fields.push_back({{"field", e.field}, {"message", e.message}});
        return detail::send_json(res, 422, {{"error", "validation failed"}, {"fields", fields}});
      }
      case SubmitStatus::accepted:
        return detail::send_json(res, 200, {{"status", "accepted"}, {"cursor", r.cursor}, {"completed", r.completed}});
    }
  });

  server.Get("/api/export", [&svc](const Request&, Response& res) {
    res.status = 200;
    res.set_content(svc.export_csv(), "text/csv");
  });

  server.Get("/api/health", [&svc](const Request&, Response& res) {
    detail::send_json(res, 200, {{"status", "ok"},
                                 {"participants", svc.plan().assignments.size()},
                                 {"ratings", svc.rating_count()}});
  });

  server.Get(R"(/stimuli/(\d+))", [images = std::move(opts.stimulus_images)](const Request& req, Response& res) {
    const auto it = images.find(std::stoi(req.matches[1]));
    if (it == images.end()) return detail::send_json(res, 404, {{"error", "unknown stimulus"}});
    try {
      res.set_content(csv::read_file(it->second), detail::content_type_for(it->second));
    } catch (const IoError&) {
      detail::send_json(res, 404, {{"error", "stimulus image unavailable"}});
    }
  });

  if (opts.ui_dir) {
    if (!server.set_mount_point("/ui", opts.ui_dir->string()))
      throw IoError(fmt::format("UI directory {} does not exist", opts.ui_dir->string()));
    server.Get("/", [](const Request&, Response& res) { res.set_redirect("/ui/index.html"); });
  }
}

}  // namespace facade_affect::service
