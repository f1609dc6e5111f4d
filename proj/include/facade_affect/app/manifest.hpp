#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "facade_affect/core/csv.hpp"
#include "facade_affect/core/fs.hpp"

namespace facade_affect::app {

inline constexpr std::string_view kToolVersion = "0.1.0";

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string digest(std::string_view bytes) { return fmt::format("fnv1a64:{:016x}", fnv1a64(bytes)); }

// Collects everything an invocation read, wrote and decided, and writes it as
// run-manifest.json next to the outputs. No wall-clock time is recorded so
// identical runs give identical manifests.
class RunManifest {
public:
  explicit RunManifest(std::string command) { j_["tool"] = "facade-affect"; j_["version"] = kToolVersion; j_["command"] = std::move(command); }

  nlohmann::ordered_json& config() { return j_["config"]; }

  void input(std::string_view role, const std::filesystem::path& path) {
    inputs_.push_back({{"role", role}, {"path", path.generic_string()}, {"digest", digest(csv::read_file(path))}});
  }

  // Writes an output file atomically and records its digest (path relative to the output directory).
  void write(const std::filesystem::path& out_dir, const std::filesystem::path& rel, std::string_view contents) {
    write_file_atomic(out_dir / rel, contents);
    outputs_.push_back({{"path", rel.generic_string()}, {"bytes", contents.size()}, {"digest", digest(contents)}});
  }

  void warn(std::string message) { warnings_.push_back(std::move(message)); }
  void warn_all(const std::vector<std::string>& messages) {
    for (const auto& m : messages) warn(m);
  }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::string str() const {
    auto j = j_;
    j["inputs"] = inputs_.empty() ? nlohmann::ordered_json::array() : inputs_;
    j["outputs"] = outputs_.empty() ? nlohmann::ordered_json::array() : outputs_;
    j["warnings"] = warnings_;
    return j.dump(2) + "\n";
  }

  void save(const std::filesystem::path& out_dir) const { write_file_atomic(out_dir / "run-manifest.json", str()); }

private:
  nlohmann::ordered_json j_;
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
  nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
  std::vector<std::string> warnings_;
};

}  // namespace facade_affect::app
