#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "logbench/core_model.hpp"
#include "logbench/error.hpp"
#include "logbench/hashing.hpp"
#include "logbench/prompt_engine.hpp"
#include "logbench/rate_limiter.hpp"
#include "logbench/response_cache.hpp"

namespace logbench {

enum class BackendKind { Remote, MockEcho, MockFixture };

constexpr std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Remote: return "remote";
    case BackendKind::MockEcho: return "mock-echo";
    case BackendKind::MockFixture: return "mock-fixture";
  }
  return "unknown";
}

inline std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "remote") return BackendKind::Remote;
  if (s == "mock-echo" || s == "mock_echo") return BackendKind::MockEcho;
  if (s == "mock-fixture" || s == "mock_fixture") return BackendKind::MockFixture;
  return std::nullopt;
}

struct BackendConfig {
  BackendKind kind = BackendKind::MockEcho;
  std::string model_id = "gpt-3.5-turbo-0301";
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  double temperature = 0.0;
  int max_retries = 3;
  int requests_per_minute = 60;
  double timeout_seconds = 60.0;
  int max_in_flight = 1;
  int backoff_initial_ms = 1000;
  std::filesystem::path fixture_path;  // mock_fixture only

  void validate() const {
    auto bad = [](const std::string& why) { throw Error(ErrorKind::InvalidConfig, why); };
    if (!(temperature >= 0.0 && temperature <= 2.0)) bad("temperature must lie in [0, 2]");
    if (max_retries < 0) bad("max_retries must be non-negative");
    if (requests_per_minute <= 0) bad("requests_per_minute must be positive");
    if (!(timeout_seconds > 0.0)) bad("timeout_seconds must be positive");
    if (max_in_flight <= 0) bad("max_in_flight must be positive");
    if (model_id.empty()) bad("model id is empty");
    if (kind == BackendKind::Remote && endpoint_url.empty()) bad("remote backend requires an endpoint URL");
  }
};

struct RawResponse {
  std::string text;
  bool cached = false;
  int attempt_count = 1;
};

// LOGBENCH_API_KEY, falling back to OPENAI_API_KEY.
inline std::optional<std::string> api_key_from_env() {
  for (const char* var : {"LOGBENCH_API_KEY", "OPENAI_API_KEY"}) {
    const char* v = std::getenv(var);
    if (v && *v) return std::string(v);
  }
  return std::nullopt;
}

inline std::string prompt_hash(const PromptSpec& prompt) { return sha256_hex(prompt.rendered); }

// Canned responses keyed by the SHA-256 of the rendered prompt, stored as one JSON object.
class FixtureStore {
 public:
  FixtureStore() = default;

  static FixtureStore load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open fixture file " + path.string());
    FixtureStore store;
    try {
      auto doc = nlohmann::json::parse(in);
      for (auto& [k, v] : doc.items()) store.responses_[k] = v.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::IoError, "malformed fixture file " + path.string() + ": " + e.what());
    }
    return store;
  }

  void add(const std::string& rendered_prompt, std::string response) {
    responses_[sha256_hex(rendered_prompt)] = std::move(response);
  }

  std::optional<std::string> find(std::string_view hash) const {
    auto it = responses_.find(std::string(hash));
    if (it == responses_.end()) return std::nullopt;
    return it->second;
  }

  void save(const std::filesystem::path& path) const {
    nlohmann::ordered_json doc = nlohmann::ordered_json::object();
    std::vector<std::string> keys;
    for (const auto& [k, _] : responses_) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys) doc[k] = responses_.at(k);
    std::ofstream(path, std::ios::binary) << doc.dump(2) << "\n";
  }

  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::unordered_map<std::string, std::string> responses_;
};

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::InvalidConfig, "endpoint URL lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

// Chat-completion client over one backend. Thread-safe: the rate limiter and
// cache serialize internally; mock backends are reentrant.
class ChatClient {
 public:
  // For mock_fixture, `fixtures` (when given) replaces loading cfg.fixture_path.
  explicit ChatClient(BackendConfig cfg, std::optional<std::string> api_key = api_key_from_env(),
                      std::optional<FixtureStore> fixtures = std::nullopt)
      : cfg_(std::move(cfg)), api_key_(std::move(api_key)), limiter_(static_cast<std::size_t>(cfg_.requests_per_minute)) {
    cfg_.validate();
    if (cfg_.kind == BackendKind::Remote) {
      if (!api_key_) throw Error(ErrorKind::AuthError, "no API key: set LOGBENCH_API_KEY (or OPENAI_API_KEY)");
      endpoint_ = detail::split_endpoint(cfg_.endpoint_url);
    }
    if (cfg_.kind == BackendKind::MockFixture) {
      if (fixtures) fixtures_ = std::move(*fixtures);
      else if (cfg_.fixture_path.empty()) throw Error(ErrorKind::InvalidConfig, "mock-fixture backend requires a fixture file");
      else fixtures_ = FixtureStore::load(cfg_.fixture_path);
    }
  }

  const BackendConfig& config() const noexcept { return cfg_; }

  // In offline mode every backend call fails; only cached responses are served.
  void set_offline(bool offline) noexcept { offline_ = offline; }
  bool offline() const noexcept { return offline_; }

  std::size_t backend_calls() const noexcept { return backend_calls_.load(); }

  // `truth` is consulted by mock_echo only.
  RawResponse complete(const PromptSpec& prompt, const Template* truth = nullptr) {
    if (prompt.rendered.empty()) throw Error(ErrorKind::EmptyLog, "prompt has no rendered text");
    if (offline_) throw Error(ErrorKind::TransportError, "offline replay: backend call attempted for an uncached prompt");
    switch (cfg_.kind) {
      case BackendKind::MockEcho: {
        if (!truth) throw Error(ErrorKind::InvalidConfig, "mock-echo backend needs the target's ground-truth template");
        ++backend_calls_;
        return {"`" + truth->raw() + "'", false, 1};
      }
      case BackendKind::MockFixture: {
        auto hash = prompt_hash(prompt);
        auto hit = fixtures_.find(hash);
        if (!hit) throw Error(ErrorKind::FixtureMiss, "no fixture response for prompt hash " + hash);
        ++backend_calls_;
        return {*hit, false, 1};
      }
      case BackendKind::Remote:
        return complete_remote(prompt);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown backend");
  }

  RawResponse cached_complete(const PromptSpec& prompt, ResponseCache& cache, const Template* truth = nullptr) {
    auto hash = prompt_hash(prompt);
    if (auto hit = cache.lookup(cfg_.model_id, hash)) {
      ++cache_hits_;
      return {*hit, true, 1};
    }
    ++cache_misses_;
    auto resp = complete(prompt, truth);
    cache.store(cfg_.model_id, hash, resp.text);
    return resp;
  }

  std::size_t cache_hits() const noexcept { return cache_hits_.load(); }
  std::size_t cache_misses() const noexcept { return cache_misses_.load(); }

 private:
  RawResponse complete_remote(const PromptSpec& prompt) {
    nlohmann::json body = {
        {"model", cfg_.model_id},
        {"temperature", cfg_.temperature},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.rendered}}})},
    };
    const std::string payload = body.dump();
    const httplib::Headers headers = {{"Authorization", "Bearer " + *api_key_}};

    ErrorKind last_kind = ErrorKind::TransportError;
    std::string last_error;
    const int max_attempts = cfg_.max_retries + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
      if (attempt > 1) {
        auto delay = std::chrono::milliseconds(
            std::min<long long>(static_cast<long long>(cfg_.backoff_initial_ms) << std::min(attempt - 2, 16), 30000));
        std::this_thread::sleep_for(delay);
      }
      limiter_.acquire();
      ++backend_calls_;

      httplib::Client cli(endpoint_.origin);
      auto secs = std::chrono::duration<double>(cfg_.timeout_seconds);
      auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(secs);
      cli.set_connection_timeout(timeout);
      cli.set_read_timeout(timeout);
      cli.set_write_timeout(timeout);
      auto res = cli.Post(endpoint_.path, headers, payload, "application/json");

      if (!res) {
        last_kind = ErrorKind::TransportError;
        last_error = "transport failure: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 401 || res->status == 403) {
        throw Error(ErrorKind::AuthError, "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status == 429) {
        last_kind = ErrorKind::RateLimitExhausted;
        last_error = "HTTP 429 rate limited";
        continue;
      }
      if (res->status >= 500) {
        last_kind = ErrorKind::TransportError;
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorKind::TransportError, "HTTP " + std::to_string(res->status) + ": " + res->body);
      }
      try {
        auto doc = nlohmann::json::parse(res->body);
        auto text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        return {std::move(text), false, attempt};
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::TransportError, std::string("malformed completion response: ") + e.what());
      }
    }
    throw Error(last_kind, last_error + " after " + std::to_string(max_attempts) + " attempt(s)");
  }

  BackendConfig cfg_;
  std::optional<std::string> api_key_;
  detail::Endpoint endpoint_;
  FixtureStore fixtures_;
  RateLimiter limiter_;
  bool offline_ = false;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
  std::atomic<std::size_t> cache_misses_{0};
};

}  // namespace logbench
