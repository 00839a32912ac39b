#include "langadapt/eval/preference.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>
#include <set>

#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::eval {

namespace {

using json = nlohmann::json;

std::string padded(std::string_view prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06zu", n);
  return std::string(prefix) + buf;
}

template <typename T, typename Fn>
std::vector<T> parse_lines(std::string_view jsonl, const std::string& source, Fn&& fn) {
  std::vector<T> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(fn(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return out;
}

json pair_json(const PreferencePair& pair) {
  return {{"pair_id", pair.pair_id},
          {"prompt_id", pair.prompt_id},
          {"prompt", pair.prompt},
          {"model_a", pair.side_a.model_name},
          {"response_a", pair.side_a.response},
          {"model_b", pair.side_b.model_name},
          {"response_b", pair.side_b.response},
          {"assignment_seed", pair.assignment_seed}};
}

PreferencePair pair_from_json(const json& j) {
  PreferencePair p;
  p.pair_id = j.at("pair_id").get<std::string>();
  p.prompt_id = j.at("prompt_id").get<std::string>();
  p.prompt = j.at("prompt").get<std::string>();
  p.side_a = {j.at("model_a").get<std::string>(), j.at("response_a").get<std::string>()};
  p.side_b = {j.at("model_b").get<std::string>(), j.at("response_b").get<std::string>()};
  p.assignment_seed = j.at("assignment_seed").get<std::uint64_t>();
  if (p.pair_id.empty()) throw ValidationError("empty pair_id");
  if (p.side_a.model_name == p.side_b.model_name) {
    throw ValidationError("pair " + p.pair_id + " compares a model with itself");
  }
  return p;
}

json judgment_json(const Judgment& j) {
  return {{"pair_id", j.pair_id},
          {"choice", std::string(to_string(j.choice))},
          {"judge", std::string(to_string(j.judge))},
          {"annotator_id", j.annotator_id},
          {"timestamp", j.timestamp}};
}

Judgment judgment_from_json(const json& j) {
  Judgment out;
  out.pair_id = j.at("pair_id").get<std::string>();
  const auto choice = parse_choice(j.at("choice").get<std::string>());
  if (!choice) throw ValidationError("invalid choice");
  out.choice = *choice;
  const auto judge = parse_judge_kind(j.at("judge").get<std::string>());
  if (!judge) throw ValidationError("invalid judge kind");
  out.judge = *judge;
  out.annotator_id = j.at("annotator_id").get<std::string>();
  out.timestamp = j.value("timestamp", "");
  return out;
}

}  // namespace

std::string_view to_string(Choice c) {
  switch (c) {
    case Choice::kA:
      return "A";
    case Choice::kB:
      return "B";
    case Choice::kTie:
      return "tie";
  }
  return "tie";
}

std::string_view to_string(JudgeKind k) { return k == JudgeKind::kHuman ? "human" : "model"; }

std::optional<Choice> parse_choice(std::string_view s) {
  if (s == "A") return Choice::kA;
  if (s == "B") return Choice::kB;
  if (s == "tie") return Choice::kTie;
  return std::nullopt;
}

std::optional<JudgeKind> parse_judge_kind(std::string_view s) {
  if (s == "human") return JudgeKind::kHuman;
  if (s == "model") return JudgeKind::kModel;
  return std::nullopt;
}

std::string LmResponder::respond(const std::string& prompt) const {
  return model::generate(lm_, vocab_, prompt, settings_);
}

std::vector<PreferencePair> build_preference_batch(std::span<const Contestant> contestants,
                                                   std::span<const std::string> prompts,
                                                   std::uint64_t seed) {
  if (contestants.size() < 2) throw ValidationError("preference batch needs at least two models");
  std::set<std::string> names;
  for (const auto& c : contestants) {
    if (c.responder == nullptr) throw ValidationError("contestant " + c.name + " has no responder");
    if (!names.insert(c.name).second) throw ValidationError("duplicate model name " + c.name);
  }
  std::vector<PreferencePair> pairs;
  std::mt19937_64 seeder(seed);
  for (std::size_t p = 0; p < prompts.size(); ++p) {
    // Each response is generated once per prompt and reused across pairs.
    std::vector<std::string> responses;
    for (const auto& c : contestants) {
      try {
        responses.push_back(c.responder->respond(prompts[p]));
      } catch (const std::exception& e) {
        throw Error("generation failed for model " + c.name + " on prompt " +
                    padded("prompt-", p) + ": " + e.what());
      }
    }
    for (std::size_t i = 0; i < contestants.size(); ++i) {
      for (std::size_t j = i + 1; j < contestants.size(); ++j) {
        PreferencePair pair;
        pair.pair_id = padded("pair-", pairs.size());
        pair.prompt_id = padded("prompt-", p);
        pair.prompt = prompts[p];
        pair.assignment_seed = seeder();
        const ResponseSide first{contestants[i].name, responses[i]};
        const ResponseSide second{contestants[j].name, responses[j]};
        const bool heads = (std::mt19937_64(pair.assignment_seed)() >> 63) == 0;
        pair.side_a = heads ? first : second;
        pair.side_b = heads ? second : first;
        pairs.push_back(std::move(pair));
      }
    }
  }
  return pairs;
}

std::string to_json(const PreferencePair& pair) { return pair_json(pair).dump(); }

PreferencePair parse_pair(std::string_view json_text) {
  try {
    return pair_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid pair record: ") + e.what());
  }
}

std::string annotator_view(const PreferencePair& pair) {
  return json{{"pair_id", pair.pair_id},
              {"prompt", pair.prompt},
              {"response_a", pair.side_a.response},
              {"response_b", pair.side_b.response}}
      .dump();
}

std::string to_json(const Judgment& j) { return judgment_json(j).dump(); }

Judgment parse_judgment(std::string_view json_text) {
  try {
    return judgment_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid judgment record: ") + e.what());
  }
}

std::string pairs_to_jsonl(std::span<const PreferencePair> pairs) {
  std::string out;
  for (const auto& p : pairs) out += to_json(p) + "\n";
  return out;
}

std::vector<PreferencePair> parse_pairs(std::string_view jsonl, const std::string& source) {
  auto pairs = parse_lines<PreferencePair>(jsonl, source, pair_from_json);
  std::set<std::string> ids;
  for (const auto& p : pairs) {
    if (!ids.insert(p.pair_id).second) {
      throw ValidationError(source + ": duplicate pair_id " + p.pair_id);
    }
  }
  return pairs;
}

std::vector<PreferencePair> load_pairs(const std::filesystem::path& path) {
  return parse_pairs(read_file(path), path.string());
}

std::string judgments_to_jsonl(std::span<const Judgment> judgments) {
  std::string out;
  for (const auto& j : judgments) out += to_json(j) + "\n";
  return out;
}

std::vector<Judgment> parse_judgments(std::string_view jsonl, const std::string& source) {
  return parse_lines<Judgment>(jsonl, source, judgment_from_json);
}

std::vector<Judgment> load_judgments(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  return parse_judgments(read_file(path), path.string());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace langadapt::eval
