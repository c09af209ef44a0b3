#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "logbench/llm_client.hpp"
#include "test_support.hpp"

using namespace logbench;

namespace {

PromptSpec prompt_for(const std::string& log) { return render_prompt(PromptVariant::PT1, {}, log); }

BackendConfig mock(BackendKind kind) {
  BackendConfig cfg;
  cfg.kind = kind;
  return cfg;
}

// Local chat-completion endpoint that replays a scripted list of statuses.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::vector<int> statuses, std::string reply = "`send <*> bytes'")
      : statuses_(std::move(statuses)), reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::size_t i = hits_++;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      int status = i < statuses_.size() ? statuses_[i] : statuses_.back();
      res.status = status;
      if (status == 200) {
        nlohmann::json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", reply_}}}}}}};
        res.set_content(body.dump(), "application/json");
      } else {
        res.set_content("{\"error\":\"scripted\"}", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  std::size_t hits() const { return hits_.load(); }
  std::string last_body() const { return last_body_; }
  std::string last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::vector<int> statuses_;
  std::string reply_;
  std::atomic<std::size_t> hits_{0};
  std::string last_body_, last_auth_;
  int port_ = 0;
  std::thread thread_;
};

BackendConfig remote(const FakeEndpoint& ep, int retries) {
  BackendConfig cfg;
  cfg.kind = BackendKind::Remote;
  cfg.endpoint_url = ep.url();
  cfg.max_retries = retries;
  cfg.backoff_initial_ms = 1;
  cfg.requests_per_minute = 1000;
  cfg.timeout_seconds = 5;
  return cfg;
}

ErrorKind error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error";
  return ErrorKind::IoError;
}

}  // namespace

TEST(MockEcho, WrapsTruthInBackticks) {
  ChatClient client(mock(BackendKind::MockEcho));
  auto truth = Template::from_text("cupsd shutdown succeeded");
  auto resp = client.complete(prompt_for("cupsd shutdown succeeded"), &truth);
  EXPECT_EQ(resp.text, "`cupsd shutdown succeeded'");
  EXPECT_FALSE(resp.cached);
  EXPECT_EQ(resp.attempt_count, 1);
  EXPECT_EQ(error_of([&] { client.complete(prompt_for("x")); }), ErrorKind::InvalidConfig);
}

TEST(MockFixture, ReturnsStoredResponseOrFixtureMiss) {
  FixtureStore store;
  auto p = prompt_for("Putting block rdd_0_1 with replication took 0");
  store.add(p.rendered, "`Putting block <*> with replication took <*>'");
  ChatClient client(mock(BackendKind::MockFixture), std::nullopt, store);
  auto resp = client.complete(p);
  EXPECT_EQ(resp.text, "`Putting block <*> with replication took <*>'");
  EXPECT_FALSE(resp.cached);
  EXPECT_EQ(error_of([&] { client.complete(prompt_for("unknown")); }), ErrorKind::FixtureMiss);
}

TEST(MockFixture, LoadsFromFile) {
  testkit::TempDir dir("fixture");
  FixtureStore store;
  store.add(prompt_for("a").rendered, "`a'");
  store.save(dir.path() / "fx.json");
  auto cfg = mock(BackendKind::MockFixture);
  cfg.fixture_path = dir.path() / "fx.json";
  ChatClient client(cfg, std::nullopt);
  EXPECT_EQ(client.complete(prompt_for("a")).text, "`a'");
  cfg.fixture_path.clear();
  EXPECT_EQ(error_of([&] { ChatClient c(cfg, std::nullopt); }), ErrorKind::InvalidConfig);
}

TEST(Remote, MissingKeyFailsBeforeAnyRequest) {
  FakeEndpoint ep({200});
  EXPECT_EQ(error_of([&] { ChatClient c(remote(ep, 0), std::nullopt); }), ErrorKind::AuthError);
  EXPECT_EQ(ep.hits(), 0u);
}

TEST(Remote, SendsSingleUserMessageWithBearerToken) {
  FakeEndpoint ep({200});
  auto cfg = remote(ep, 0);
  cfg.model_id = "gpt-3.5-turbo-0301";
  ChatClient client(cfg, std::string("sk-test"));
  auto p = prompt_for("send 512 bytes");
  auto resp = client.complete(p);
  EXPECT_EQ(resp.text, "`send <*> bytes'");
  EXPECT_EQ(resp.attempt_count, 1);
  EXPECT_EQ(ep.last_auth(), "Bearer sk-test");
  auto body = nlohmann::json::parse(ep.last_body());
  EXPECT_EQ(body["model"], "gpt-3.5-turbo-0301");
  EXPECT_EQ(body["temperature"], 0.0);
  ASSERT_EQ(body["messages"].size(), 1u);
  EXPECT_EQ(body["messages"][0]["role"], "user");
  EXPECT_EQ(body["messages"][0]["content"], p.rendered);
}

TEST(Remote, RateLimitedWithNoRetriesFailsAfterOneAttempt) {
  FakeEndpoint ep({429});
  ChatClient client(remote(ep, 0), std::string("k"));
  EXPECT_EQ(error_of([&] { client.complete(prompt_for("a")); }), ErrorKind::RateLimitExhausted);
  EXPECT_EQ(ep.hits(), 1u);
}

TEST(Remote, RetriesTransientFailuresThenSucceeds) {
  FakeEndpoint ep({500, 429, 200});
  ChatClient client(remote(ep, 3), std::string("k"));
  auto resp = client.complete(prompt_for("a"));
  EXPECT_EQ(resp.attempt_count, 3);
  EXPECT_EQ(ep.hits(), 3u);
}

TEST(Remote, RetriesExhaustedOnServerErrors) {
  FakeEndpoint ep({503});
  ChatClient client(remote(ep, 2), std::string("k"));
  EXPECT_EQ(error_of([&] { client.complete(prompt_for("a")); }), ErrorKind::TransportError);
  EXPECT_EQ(ep.hits(), 3u);
}

TEST(Remote, RejectedCredentialsAreNotRetried) {
  FakeEndpoint ep({401});
  ChatClient client(remote(ep, 5), std::string("bad"));
  EXPECT_EQ(error_of([&] { client.complete(prompt_for("a")); }), ErrorKind::AuthError);
  EXPECT_EQ(ep.hits(), 1u);
}

TEST(Remote, UnreachableEndpointIsTransportError) {
  BackendConfig cfg;
  cfg.kind = BackendKind::Remote;
  cfg.endpoint_url = "http://127.0.0.1:1/v1/chat/completions";
  cfg.max_retries = 1;
  cfg.backoff_initial_ms = 1;
  cfg.timeout_seconds = 1;
  ChatClient client(cfg, std::string("k"));
  EXPECT_EQ(error_of([&] { client.complete(prompt_for("a")); }), ErrorKind::TransportError);
}

TEST(Remote, RefusalTextIsReturnedVerbatim) {
  FakeEndpoint ep({200}, "Could you provide more context about this log?");
  ChatClient client(remote(ep, 0), std::string("k"));
  EXPECT_EQ(client.complete(prompt_for("a")).text, "Could you provide more context about this log?");
}

TEST(BackendConfigValidation, RejectsOutOfRangeFields) {
  auto cfg = mock(BackendKind::MockEcho);
  cfg.temperature = 2.5;
  EXPECT_EQ(error_of([&] { cfg.validate(); }), ErrorKind::InvalidConfig);
  cfg.temperature = 0;
  cfg.requests_per_minute = 0;
  EXPECT_EQ(error_of([&] { cfg.validate(); }), ErrorKind::InvalidConfig);
}

TEST(CachedComplete, SecondCallIsServedFromCache) {
  testkit::TempDir dir("cache");
  ResponseCache cache(dir.path() / "cache.jsonl");
  ChatClient client(mock(BackendKind::MockEcho));
  auto truth = Template::from_text("send <*> bytes");
  auto p = prompt_for("send 512 bytes");
  auto first = client.cached_complete(p, cache, &truth);
  auto second = client.cached_complete(p, cache, &truth);
  EXPECT_FALSE(first.cached);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(first.text, second.text);
  EXPECT_EQ(client.backend_calls(), 1u);

  // Reopened from disk, the entry is still there.
  ResponseCache reopened(dir.path() / "cache.jsonl");
  EXPECT_EQ(reopened.lookup("gpt-3.5-turbo-0301", prompt_hash(p)), first.text);
  EXPECT_FALSE(reopened.lookup("other-model", prompt_hash(p)));
}

TEST(CachedComplete, OneCharacterApartMeansTwoEntries) {
  testkit::TempDir dir("cache2");
  ResponseCache cache(dir.path() / "c.jsonl");
  ChatClient client(mock(BackendKind::MockEcho));
  auto truth = Template::from_text("t");
  client.cached_complete(prompt_for("abc"), cache, &truth);
  client.cached_complete(prompt_for("abd"), cache, &truth);
  EXPECT_EQ(cache.size(), 2u);
}

TEST(CachedComplete, CorruptedLineIsReportedByNumber) {
  testkit::TempDir dir("cache3");
  auto path = dir.path() / "c.jsonl";
  {
    ResponseCache cache(path);
    cache.store("m", "h1", "r1");
    cache.store("m", "h2", "r2");
  }
  {
    std::ifstream in(path);
    std::string l1, l2;
    std::getline(in, l1);
    std::getline(in, l2);
    std::ofstream out(path, std::ios::trunc);
    out << l1 << "\n" << l2.substr(0, l2.size() / 2) << "\n";
  }
  try {
    ResponseCache broken(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CacheIoError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(CachedComplete, LastWriteWinsForIdenticalKeys) {
  testkit::TempDir dir("cache4");
  auto path = dir.path() / "c.jsonl";
  {
    ResponseCache cache(path);
    cache.store("m", "h", "old");
    cache.store("m", "h", "new");
  }
  ResponseCache reopened(path);
  EXPECT_EQ(reopened.lookup("m", "h"), "new");
}

TEST(CachedComplete, OfflineClientServesOnlyCachedPrompts) {
  testkit::TempDir dir("cache5");
  ResponseCache cache(dir.path() / "c.jsonl");
  ChatClient client(mock(BackendKind::MockEcho));
  auto truth = Template::from_text("t");
  client.cached_complete(prompt_for("a"), cache, &truth);
  client.set_offline(true);
  EXPECT_TRUE(client.cached_complete(prompt_for("a"), cache, &truth).cached);
  EXPECT_EQ(error_of([&] { client.cached_complete(prompt_for("b"), cache, &truth); }), ErrorKind::TransportError);
  EXPECT_EQ(client.backend_calls(), 1u);
}

TEST(CachedComplete, ConcurrentCallersAgree) {
  testkit::TempDir dir("cache6");
  ResponseCache cache(dir.path() / "c.jsonl");
  FixtureStore store;
  for (int i = 0; i < 50; ++i) store.add(prompt_for("m" + std::to_string(i)).rendered, "`t" + std::to_string(i) + "'");
  ChatClient client(mock(BackendKind::MockFixture), std::nullopt, store);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 50; ++i) {
        auto r = client.cached_complete(prompt_for("m" + std::to_string(i)), cache);
        EXPECT_EQ(r.text, "`t" + std::to_string(i) + "'");
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(cache.size(), 50u);
  ResponseCache reopened(dir.path() / "c.jsonl");
  EXPECT_EQ(reopened.size(), 50u);
}

// Sliding-window contract: no 60 s window ever sees more than the configured count.
TEST(RateLimiter, NeverExceedsPerMinuteBudget) {
  using namespace std::chrono;
  RateLimiter::Clock::time_point now{};
  std::vector<RateLimiter::Clock::time_point> admitted;
  RateLimiter limiter(
      10, minutes(1), [&] { return now; }, [&](RateLimiter::Clock::duration d) { now += d; });
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> gap_ms(0, 4000);
  for (int i = 0; i < 300; ++i) {
    now += milliseconds(gap_ms(rng));
    limiter.acquire();
    admitted.push_back(now);
  }
  for (std::size_t i = 0; i < admitted.size(); ++i) {
    std::size_t in_window = 0;
    for (std::size_t j = i; j < admitted.size() && admitted[j] - admitted[i] < minutes(1); ++j) ++in_window;
    EXPECT_LE(in_window, 10u) << "window starting at admission " << i;
  }
  EXPECT_GE(admitted.back() - admitted.front(), minutes(29));
}
