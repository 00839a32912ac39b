#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/model/causal_lm.hpp"
#include "langadapt/tokenizer/vocab.hpp"

namespace langadapt::eval {

struct ResponseSide {
  std::string model_name;
  std::string response;
};

struct PreferencePair {
  std::string pair_id;
  std::string prompt_id;
  std::string prompt;
  ResponseSide side_a;
  ResponseSide side_b;
  std::uint64_t assignment_seed = 0;
};

enum class Choice { kA, kB, kTie };
enum class JudgeKind { kHuman, kModel };

std::string_view to_string(Choice c);
std::string_view to_string(JudgeKind k);
// Exact spellings only: "A", "B", "tie" and "human", "model".
std::optional<Choice> parse_choice(std::string_view s);
std::optional<JudgeKind> parse_judge_kind(std::string_view s);

struct Judgment {
  std::string pair_id;
  Choice choice = Choice::kTie;
  JudgeKind judge = JudgeKind::kHuman;
  std::string annotator_id;
  std::string timestamp;  // ISO-8601 UTC
};

// Produces one model's response to a prompt.
class Responder {
 public:
  virtual ~Responder() = default;
  virtual std::string respond(const std::string& prompt) const = 0;
};

// Greedy or sampled generation with fixed settings.
class LmResponder final : public Responder {
 public:
  LmResponder(const model::CausalLm& lm, const tokenizer::Vocabulary& vocab,
              model::GenerationSettings settings)
      : lm_(lm), vocab_(vocab), settings_(settings) {}
  std::string respond(const std::string& prompt) const override;

 private:
  const model::CausalLm& lm_;
  const tokenizer::Vocabulary& vocab_;
  model::GenerationSettings settings_;
};

struct Contestant {
  std::string name;
  const Responder* responder = nullptr;
};

// One pair per prompt and unordered contestant pair (prompt-major order).
// Side A holds the earlier contestant when the pair's seeded coin lands
// heads. Ids are positional and reveal nothing about the contestants.
// Throws ValidationError with fewer than two contestants or duplicate
// names; responder failures are rethrown naming the pair.
std::vector<PreferencePair> build_preference_batch(std::span<const Contestant> contestants,
                                                   std::span<const std::string> prompts,
                                                   std::uint64_t seed);

// Compact JSON objects. The pair record is admin-side and names models.
std::string to_json(const PreferencePair& pair);
PreferencePair parse_pair(std::string_view json_text);
// The only view of a pair that annotators and judges ever see:
// pair_id, prompt, response_a, response_b.
std::string annotator_view(const PreferencePair& pair);

std::string to_json(const Judgment& j);
Judgment parse_judgment(std::string_view json_text);

std::string pairs_to_jsonl(std::span<const PreferencePair> pairs);
std::vector<PreferencePair> parse_pairs(std::string_view jsonl, const std::string& source = "<pairs>");
std::vector<PreferencePair> load_pairs(const std::filesystem::path& path);

std::string judgments_to_jsonl(std::span<const Judgment> judgments);
std::vector<Judgment> parse_judgments(std::string_view jsonl,
                                      const std::string& source = "<judgments>");
// A missing file is an empty log.
std::vector<Judgment> load_judgments(const std::filesystem::path& path);

std::string utc_timestamp();

}  // namespace langadapt::eval
