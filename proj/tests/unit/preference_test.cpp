#include <gtest/gtest.h>

#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "langadapt/eval/preference.hpp"
#include "langadapt/model/transformer.hpp"
#include "langadapt/util/error.hpp"
#include "test_support.hpp"

namespace langadapt::eval {
namespace {

class EchoResponder final : public Responder {
 public:
  explicit EchoResponder(std::string suffix) : suffix_(std::move(suffix)) {}
  std::string respond(const std::string& prompt) const override { return prompt + suffix_; }

 private:
  std::string suffix_;
};

class FailingResponder final : public Responder {
 public:
  std::string respond(const std::string&) const override { throw std::runtime_error("boom"); }
};

std::vector<std::string> prompts(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("질문 " + std::to_string(i));
  return out;
}

TEST(PreferenceBatch, OnePairPerPromptAndModelPair) {
  const EchoResponder a("!"), b("?"), c("...");
  const std::vector<Contestant> cs{{"alpha", &a}, {"beta", &b}, {"gamma", &c}};
  const auto ps = prompts(10);
  const auto pairs = build_preference_batch(cs, ps, 3);
  ASSERT_EQ(pairs.size(), 30u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    ids.insert(p.pair_id);
    EXPECT_EQ(p.prompt, ps[i / 3]);
    EXPECT_NE(p.side_a.model_name, p.side_b.model_name);
    EXPECT_EQ(p.side_a.response, p.prompt + (p.side_a.model_name == "alpha"  ? "!"
                                             : p.side_a.model_name == "beta" ? "?"
                                                                              : "..."));
  }
  EXPECT_EQ(ids.size(), 30u);
  EXPECT_EQ(pairs[0].pair_id, "pair-000000");
  EXPECT_EQ(pairs[29].prompt_id, "prompt-000009");
}

TEST(PreferenceBatch, SideAssignmentIsReproducible) {
  const EchoResponder a("!"), b("?");
  const std::vector<Contestant> cs{{"alpha", &a}, {"beta", &b}};
  const auto ps = prompts(50);
  const auto x = build_preference_batch(cs, ps, 42);
  const auto y = build_preference_batch(cs, ps, 42);
  std::mt19937_64 seeder(42);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].side_a.model_name, y[i].side_a.model_name);
    EXPECT_EQ(x[i].assignment_seed, seeder());
    const bool alpha_first = (std::mt19937_64(x[i].assignment_seed)() >> 63) == 0;
    EXPECT_EQ(x[i].side_a.model_name, alpha_first ? "alpha" : "beta");
  }
}

TEST(PreferenceBatch, Errors) {
  const EchoResponder a("!");
  const FailingResponder f;
  const auto ps = prompts(2);
  const std::vector<Contestant> one{{"alpha", &a}};
  EXPECT_THROW(build_preference_batch(one, ps, 1), ValidationError);
  const std::vector<Contestant> dup{{"alpha", &a}, {"alpha", &a}};
  EXPECT_THROW(build_preference_batch(dup, ps, 1), ValidationError);
  const std::vector<Contestant> failing{{"alpha", &a}, {"broken", &f}};
  try {
    build_preference_batch(failing, ps, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(PreferenceBatch, LmResponderGenerates) {
  model::ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.max_seq = 16;
  c.vocab_size = testing::merged_vocab().size();
  const auto m = model::init_model<float>(c);
  const model::TransformerLm lm(m);
  const LmResponder r(lm, testing::merged_vocab(), {.max_new = 4, .temperature = 0.0, .seed = 1});
  EXPECT_EQ(r.respond("공룡"), r.respond("공룡"));
}

TEST(AnnotatorView, HasExactlyTheBlindedFields) {
  const EchoResponder a("!"), b("?");
  const std::vector<Contestant> cs{{"alpha-model", &a}, {"beta-model", &b}};
  for (const auto& p : build_preference_batch(cs, prompts(5), 9)) {
    const std::string view = annotator_view(p);
    const auto j = nlohmann::json::parse(view);
    EXPECT_EQ(j.size(), 4u);
    for (const char* key : {"pair_id", "prompt", "response_a", "response_b"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(view.find("alpha-model"), std::string::npos);
    EXPECT_EQ(view.find("beta-model"), std::string::npos);
    EXPECT_EQ(j.at("response_a"), p.side_a.response);
  }
}

TEST(Serialization, PairsAndJudgmentsRoundTrip) {
  const EchoResponder a("줄바꿈\n\"인용\""), b("?");
  const std::vector<Contestant> cs{{"alpha", &a}, {"beta", &b}};
  const auto pairs = build_preference_batch(cs, prompts(4), 2);
  const auto back = parse_pairs(pairs_to_jsonl(pairs));
  ASSERT_EQ(back.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(back[i].pair_id, pairs[i].pair_id);
    EXPECT_EQ(back[i].side_a.response, pairs[i].side_a.response);
    EXPECT_EQ(back[i].side_b.model_name, pairs[i].side_b.model_name);
    EXPECT_EQ(back[i].assignment_seed, pairs[i].assignment_seed);
  }
  const std::string doubled = pairs_to_jsonl(pairs) + to_json(pairs[0]) + "\n";
  EXPECT_THROW(parse_pairs(doubled), Error);

  const std::vector<Judgment> js{{"pair-000000", Choice::kA, JudgeKind::kHuman, "ann-1", utc_timestamp()},
                                 {"pair-000001", Choice::kTie, JudgeKind::kModel, "mock-judge", "2026-01-01T00:00:00Z"}};
  const auto jback = parse_judgments(judgments_to_jsonl(js));
  ASSERT_EQ(jback.size(), 2u);
  EXPECT_EQ(jback[1].choice, Choice::kTie);
  EXPECT_EQ(jback[1].judge, JudgeKind::kModel);
  EXPECT_EQ(jback[0].timestamp, js[0].timestamp);
  EXPECT_TRUE(load_judgments("/nonexistent/judgments.jsonl").empty());
}

TEST(Choices, ExactSpellings) {
  EXPECT_EQ(parse_choice("A"), Choice::kA);
  EXPECT_EQ(parse_choice("tie"), Choice::kTie);
  EXPECT_FALSE(parse_choice("a").has_value());
  EXPECT_FALSE(parse_choice("Tie").has_value());
  EXPECT_EQ(parse_judge_kind("model"), JudgeKind::kModel);
  EXPECT_FALSE(parse_judge_kind("gpt").has_value());
}

}  // namespace
}  // namespace langadapt::eval
