#include <gtest/gtest.h>

#include <cmath>

#include "fake_lms.hpp"
#include "langadapt/eval/harness.hpp"
#include "langadapt/tokenizer/tokenizer.hpp"
#include "langadapt/util/error.hpp"
#include "test_support.hpp"

namespace langadapt::eval {
namespace {

TEST(Tasks, FixtureLoads) {
  const auto tasks = load_tasks(testing::fixture("tasks.jsonl"));
  EXPECT_EQ(tasks.size(), 6u);
  for (const auto& t : tasks) EXPECT_LT(t.gold, t.options.size());
}

TEST(Tasks, Validation) {
  EXPECT_THROW(parse_tasks(R"({"prompt":"p","options":["a"],"gold":0})"), ParseError);
  EXPECT_THROW(parse_tasks(R"({"prompt":"p","options":["a","b"],"gold":2})"), ParseError);
  EXPECT_THROW(parse_tasks(R"({"prompt":"p","options":["a","b"]})"), ParseError);
  try {
    parse_tasks("\n" + std::string(R"({"prompt":"p","options":["a","b"],"gold":-1})"));
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Metrics, HandComputedBinaryCase) {
  const std::vector<std::size_t> preds{0, 0, 1, 1}, golds{0, 1, 1, 1};
  const auto m = compute_metrics(preds, golds, 2);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(m.per_class_f1[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.per_class_f1[1], 4.0 / 5.0);
  EXPECT_DOUBLE_EQ(m.macro_f1, (2.0 / 3.0 + 4.0 / 5.0) / 2.0);
}

TEST(Metrics, SingleClassPredictions) {
  const std::vector<std::size_t> preds{1, 1, 1, 1}, golds{0, 0, 1, 1};
  const auto m = compute_metrics(preds, golds, 2);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0 / 3.0);
}

TEST(Metrics, PerfectAndErrors) {
  const std::vector<std::size_t> v{0, 2, 1, 2};
  const auto m = compute_metrics(v, v, 3);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.macro_f1, 1.0);
  const std::vector<std::size_t> shorter{0};
  EXPECT_THROW(compute_metrics(shorter, v, 3), ValidationError);
  EXPECT_THROW(compute_metrics(v, v, 2), ValidationError);
  EXPECT_THROW(compute_metrics({}, {}, 2), ValidationError);
}

TEST(Scoring, SumsOptionLogProbabilities) {
  const auto& v = testing::merged_vocab();
  const testing::HashLm lm(v.size());
  const ClassificationTask task{"햄버거를 먹는", {"공룡", "the model"}, 0};
  const auto scores = score_options(lm, v, task);
  const auto prompt = tokenizer::encode(v, task.prompt);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto opt = tokenizer::encode(v, task.options[k], {.add_prefix_marker = false});
    auto ids = prompt;
    ids.insert(ids.end(), opt.begin(), opt.end());
    const auto logits = lm.logits(ids);
    double expected = 0.0;
    for (std::size_t j = 0; j < opt.size(); ++j) {
      const std::size_t row = prompt.size() - 1 + j;
      double z = 0.0;
      for (std::size_t c = 0; c < v.size(); ++c) z += std::exp(static_cast<double>(logits.at(row, c)));
      expected += logits.at(row, opt[j]) - std::log(z);
    }
    EXPECT_NEAR(scores.log_probs[k], expected, 1e-4);
  }
  const auto normalized = score_options(lm, v, task, {.length_normalize = true});
  EXPECT_NEAR(normalized.log_probs[0], scores.log_probs[0] / std::string("공룡").size(), 1e-9);
}

TEST(Scoring, TiesGoToLowestIndex) {
  const auto& v = testing::merged_vocab();
  const testing::RiggedLm lm(v, {});
  const ClassificationTask task{"공룡", {"를", "는", "를"}, 1};
  EXPECT_EQ(score_options(lm, v, task).predicted, 0u);
}

TEST(Scoring, RiggedModelIsPerfect) {
  const auto tasks = load_tasks(testing::fixture("tasks.jsonl"));
  const auto& v = testing::merged_vocab();
  const testing::RiggedLm lm(v, tasks);
  const auto r = evaluate(lm, v, tasks);
  EXPECT_DOUBLE_EQ(r.metrics.accuracy, 1.0);
  EXPECT_EQ(r.predictions, r.golds);
  const std::string csv = metrics_csv(r);
  EXPECT_EQ(csv.rfind("metric,value\n", 0), 0u);
  EXPECT_NE(csv.find("accuracy,1"), std::string::npos);
}

TEST(Scoring, Errors) {
  const auto& v = testing::merged_vocab();
  const testing::HashLm lm(v.size(), 4);
  EXPECT_THROW(score_options(lm, v, {"공룡", {}, 0}), ValidationError);
  EXPECT_THROW(score_options(lm, v, {"공룡", {"", "a"}, 0}), ValidationError);
  EXPECT_THROW(score_options(lm, v, {"the model of the language", {"a", "b"}, 0}), ValidationError);
}

}  // namespace
}  // namespace langadapt::eval
