#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "json.hpp"
#include "logbench/error.hpp"
#include "logbench/hashing.hpp"

namespace logbench {

inline std::string utc_timestamp() {
  auto now = std::chrono::system_clock::now();
  std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Append-only JSON-lines store of model responses. One record per line:
//   {"key": ..., "model": ..., "prompt_hash": ..., "response": ..., "ts": ...}
// Later records win over earlier ones with the same key.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // created on first store
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        auto rec = nlohmann::json::parse(line);
        entries_[rec.at("key").get<std::string>()] = rec.at("response").get<std::string>();
        (void)rec.at("model").get<std::string>();
        (void)rec.at("prompt_hash").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::CacheIoError,
                    path_.string() + ": corrupted record on line " + std::to_string(line_no) + " (" + e.what() + ")");
      }
    }
  }

  ResponseCache(const ResponseCache&) = delete;
  ResponseCache& operator=(const ResponseCache&) = delete;

  static std::string make_key(std::string_view model_id, std::string_view prompt_hash) {
    std::string material(model_id);
    material += '\x1f';
    material += prompt_hash;
    return sha256_hex(material);
  }

  std::optional<std::string> lookup(std::string_view model_id, std::string_view prompt_hash) const {
    std::lock_guard lock(mu_);
    auto it = entries_.find(make_key(model_id, prompt_hash));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void store(std::string_view model_id, std::string_view prompt_hash, const std::string& response) {
    nlohmann::json rec = {
        {"key", make_key(model_id, prompt_hash)},
        {"model", model_id},
        {"prompt_hash", prompt_hash},
        {"response", response},
        {"ts", utc_timestamp()},
    };
    std::string line = rec.dump() + "\n";
    std::lock_guard lock(mu_);
    if (path_.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path_.parent_path(), ec);
    }
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << line;
    out.flush();
    if (!out) throw Error(ErrorKind::CacheIoError, "failed to append to " + path_.string());
    entries_[rec["key"].get<std::string>()] = response;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
};

}  // namespace logbench
