#pragma once

#include <chrono>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "langadapt/eval/preference.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::eval {

// The judge answered, but not with a verdict.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// The judge could not be reached within the retry budget.
class TransportError : public Error {
 public:
  using Error::Error;
};

struct JudgeRequest {
  std::string pair_id;
  std::string prompt;
  std::string response_a;
  std::string response_b;
};

// Returns the judge's raw verdict text for one blinded pair.
class JudgeClient {
 public:
  virtual ~JudgeClient() = default;
  virtual std::string verdict(const JudgeRequest& request) = 0;
  // Recorded as annotator_id on the judgments this client produces.
  virtual std::string id() const = 0;
};

// Pipeline stand-in with no semantic value: prefers the response with more
// code points, "tie" on equal length.
class MockJudge final : public JudgeClient {
 public:
  std::string verdict(const JudgeRequest& request) override;
  std::string id() const override { return "mock-judge"; }
};

struct HttpJudgeConfig {
  // http://host:port/path
  std::string endpoint;
  // Sent as a bearer token when the variable is set and nonempty.
  std::string token_env = "JUDGE_API_TOKEN";
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{200};
};

// POSTs {"pair_id","prompt","response_a","response_b"} and expects a JSON
// object with a string "verdict". Connection failures, 429 and 5xx are
// retried with doubling backoff; other statuses and malformed bodies raise
// ProtocolError at once.
class HttpJudgeClient final : public JudgeClient {
 public:
  explicit HttpJudgeClient(HttpJudgeConfig config);
  std::string verdict(const JudgeRequest& request) override;
  std::string id() const override;

  // Replaces std::this_thread::sleep_for, for tests.
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
    sleeper_ = std::move(sleeper);
  }

 private:
  HttpJudgeConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

// Parses the verdict strictly: surrounding whitespace is ignored and the
// rest must be exactly "A", "B" or "tie". Throws ProtocolError otherwise.
Choice parse_verdict(std::string_view text);

// Asks the judge about one pair and returns a judge=model judgment.
Judgment judge_with_model(const PreferencePair& pair, JudgeClient& judge);

struct JudgeRun {
  std::vector<Judgment> judgments;
  // pair_id and message for each pair left unjudged.
  std::vector<std::pair<std::string, std::string>> protocol_errors;
};

// Protocol errors are collected per pair; TransportError propagates.
JudgeRun judge_all(std::span<const PreferencePair> pairs, JudgeClient& judge);

}  // namespace langadapt::eval
