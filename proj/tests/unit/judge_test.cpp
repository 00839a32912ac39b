#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "langadapt/eval/judge.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::eval {
namespace {

// Replays scripted (status, body) replies and records request bodies.
class ScriptedJudge {
 public:
  explicit ScriptedJudge(std::deque<std::pair<int, std::string>> script)
      : script_(std::move(script)) {
    server_.Post("/judge", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      bodies_.push_back(req.body);
      auth_.push_back(req.get_header_value("Authorization"));
      auto [status, body] = script_.empty() ? std::pair<int, std::string>{500, "{}"} : script_.front();
      if (!script_.empty()) script_.pop_front();
      res.status = status;
      res.set_content(body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedJudge() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/judge"; }
  std::size_t requests() {
    std::lock_guard lock(mutex_);
    return bodies_.size();
  }
  std::string body(std::size_t i) {
    std::lock_guard lock(mutex_);
    return bodies_.at(i);
  }
  std::string auth(std::size_t i) {
    std::lock_guard lock(mutex_);
    return auth_.at(i);
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mutex_;
  std::deque<std::pair<int, std::string>> script_;
  std::vector<std::string> bodies_, auth_;
};

HttpJudgeClient client_for(const std::string& endpoint, std::vector<long>* sleeps,
                           int retries = 3) {
  HttpJudgeConfig cfg;
  cfg.endpoint = endpoint;
  cfg.timeout = std::chrono::milliseconds(2000);
  cfg.max_retries = retries;
  cfg.token_env = "LANGADAPT_TEST_JUDGE_TOKEN";
  HttpJudgeClient c(cfg);
  c.set_sleeper([sleeps](std::chrono::milliseconds d) { sleeps->push_back(d.count()); });
  return c;
}

const JudgeRequest kRequest{"pair-000001", "질문", "짧다", "훨씬 더 길다"};

TEST(Verdict, StrictParsing) {
  EXPECT_EQ(parse_verdict("A"), Choice::kA);
  EXPECT_EQ(parse_verdict("  B\n"), Choice::kB);
  EXPECT_EQ(parse_verdict("tie"), Choice::kTie);
  for (const char* bad : {"", "a", "A.", "Model A", "TIE", "A B", "neither"}) {
    EXPECT_THROW(parse_verdict(bad), ProtocolError) << bad;
  }
}

TEST(MockJudge, PrefersLongerResponse) {
  MockJudge j;
  EXPECT_EQ(j.verdict(kRequest), "B");
  EXPECT_EQ(j.verdict({"p", "q", "가나다", "abc"}), "tie");
  EXPECT_EQ(j.verdict({"p", "q", "abcd", "abc"}), "A");
}

TEST(HttpJudge, SendsBlindedRequestAndParsesVerdict) {
  ScriptedJudge stub({{200, R"({"verdict":"A"})"}});
  ::setenv("LANGADAPT_TEST_JUDGE_TOKEN", "s3cret", 1);
  std::vector<long> sleeps;
  auto c = client_for(stub.endpoint(), &sleeps);
  EXPECT_EQ(c.verdict(kRequest), "A");
  ::unsetenv("LANGADAPT_TEST_JUDGE_TOKEN");
  const auto sent = nlohmann::json::parse(stub.body(0));
  EXPECT_EQ(sent.size(), 4u);
  EXPECT_EQ(sent.at("response_b"), "훨씬 더 길다");
  EXPECT_EQ(stub.auth(0), "Bearer s3cret");
  EXPECT_TRUE(sleeps.empty());
}

TEST(HttpJudge, RetriesTransientFailuresWithDoublingBackoff) {
  ScriptedJudge stub({{503, "{}"}, {429, "{}"}, {200, R"({"verdict":"tie"})"}});
  std::vector<long> sleeps;
  auto c = client_for(stub.endpoint(), &sleeps);
  EXPECT_EQ(c.verdict(kRequest), "tie");
  EXPECT_EQ(stub.requests(), 3u);
  EXPECT_EQ(sleeps, (std::vector<long>{200, 400}));
}

TEST(HttpJudge, GivesUpAfterRetryBudget) {
  ScriptedJudge stub({});
  std::vector<long> sleeps;
  auto c = client_for(stub.endpoint(), &sleeps, 2);
  EXPECT_THROW(c.verdict(kRequest), TransportError);
  EXPECT_EQ(stub.requests(), 3u);
}

TEST(HttpJudge, UnreachableEndpointIsTransportError) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  std::vector<long> sleeps;
  auto c = client_for("http://127.0.0.1:" + std::to_string(port) + "/judge", &sleeps, 1);
  EXPECT_THROW(c.verdict(kRequest), TransportError);
  EXPECT_EQ(sleeps.size(), 1u);
}

TEST(HttpJudge, MalformedRepliesAreProtocolErrors) {
  ScriptedJudge stub({{200, "not json"},
                      {200, R"({"answer":"A"})"},
                      {200, R"({"verdict":1})"},
                      {400, R"({"verdict":"A"})"},
                      {200, R"({"verdict":"Model A"})"}});
  std::vector<long> sleeps;
  auto c = client_for(stub.endpoint(), &sleeps);
  for (int i = 0; i < 4; ++i) EXPECT_THROW(c.verdict(kRequest), ProtocolError) << i;
  // The transport succeeds; strict parsing rejects the text.
  EXPECT_THROW(parse_verdict(c.verdict(kRequest)), ProtocolError);
  EXPECT_EQ(stub.requests(), 5u);
  EXPECT_TRUE(sleeps.empty());
}

TEST(JudgeAll, CollectsProtocolErrorsPerPair) {
  ScriptedJudge stub({{200, R"({"verdict":"B"})"}, {200, R"({"verdict":"maybe"})"}});
  std::vector<long> sleeps;
  auto c = client_for(stub.endpoint(), &sleeps);
  std::vector<PreferencePair> pairs(2);
  pairs[0].pair_id = "pair-000000";
  pairs[1].pair_id = "pair-000001";
  const auto run = judge_all(pairs, c);
  ASSERT_EQ(run.judgments.size(), 1u);
  EXPECT_EQ(run.judgments[0].choice, Choice::kB);
  EXPECT_EQ(run.judgments[0].judge, JudgeKind::kModel);
  EXPECT_EQ(run.judgments[0].annotator_id, c.id());
  ASSERT_EQ(run.protocol_errors.size(), 1u);
  EXPECT_EQ(run.protocol_errors[0].first, "pair-000001");
}

TEST(HttpJudge, EndpointNeedsScheme) {
  HttpJudgeConfig cfg;
  cfg.endpoint = "localhost:8080/judge";
  EXPECT_THROW(HttpJudgeClient{cfg}, ValidationError);
}

}  // namespace
}  // namespace langadapt::eval
