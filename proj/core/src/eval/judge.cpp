#include "langadapt/eval/judge.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "langadapt/util/utf8.hpp"

namespace langadapt::eval {

namespace {

using json = nlohmann::json;

JudgeRequest request_for(const PreferencePair& pair) {
  return {pair.pair_id, pair.prompt, pair.side_a.response, pair.side_b.response};
}

}  // namespace

std::string MockJudge::verdict(const JudgeRequest& request) {
  const std::size_t a = utf8::count_code_points(request.response_a);
  const std::size_t b = utf8::count_code_points(request.response_b);
  if (a == b) return "tie";
  return a > b ? "A" : "B";
}

HttpJudgeClient::HttpJudgeClient(HttpJudgeConfig config)
    : config_(std::move(config)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("judge endpoint '" + url + "' has no scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (config_.max_retries < 0) throw ValidationError("max_retries must be >= 0");
}

std::string HttpJudgeClient::id() const { return "http-judge:" + scheme_host_port_; }

std::string HttpJudgeClient::verdict(const JudgeRequest& request) {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (const char* token = std::getenv(config_.token_env.c_str()); token != nullptr && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  const std::string body = json{{"pair_id", request.pair_id},
                                {"prompt", request.prompt},
                                {"response_a", request.response_a},
                                {"response_b", request.response_b}}
                               .dump();
  std::chrono::milliseconds backoff = config_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff);
      backoff *= 2;
    }
    const auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "judge returned HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("judge returned HTTP " + std::to_string(res->status));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw ProtocolError("judge reply is not JSON");
    }
    if (!reply.is_object() || !reply.contains("verdict") || !reply["verdict"].is_string()) {
      throw ProtocolError("judge reply lacks a string verdict");
    }
    return reply["verdict"].get<std::string>();
  }
  throw TransportError("judge unreachable after " + std::to_string(config_.max_retries + 1) +
                       " attempts (" + last_error + ")");
}

Choice parse_verdict(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  const auto last = text.find_last_not_of(" \t\r\n");
  const std::string_view core =
      first == std::string_view::npos ? std::string_view{} : text.substr(first, last - first + 1);
  const auto choice = parse_choice(core);
  if (!choice) {
    throw ProtocolError("unparseable verdict '" + std::string(text) + "'");
  }
  return *choice;
}

Judgment judge_with_model(const PreferencePair& pair, JudgeClient& judge) {
  Judgment j;
  j.pair_id = pair.pair_id;
  j.choice = parse_verdict(judge.verdict(request_for(pair)));
  j.judge = JudgeKind::kModel;
  j.annotator_id = judge.id();
  j.timestamp = utc_timestamp();
  return j;
}

JudgeRun judge_all(std::span<const PreferencePair> pairs, JudgeClient& judge) {
  JudgeRun run;
  for (const auto& pair : pairs) {
    try {
      run.judgments.push_back(judge_with_model(pair, judge));
    } catch (const ProtocolError& e) {
      run.protocol_errors.emplace_back(pair.pair_id, e.what());
    }
  }
  return run;
}

}  // namespace langadapt::eval
