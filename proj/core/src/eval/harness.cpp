#include "langadapt/eval/harness.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "langadapt/tokenizer/tokenizer.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::eval {

namespace {

using json = nlohmann::json;

double log_prob_of(std::span<const float> row, tokenizer::TokenId target) {
  const float m = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (const float x : row) z += std::exp(static_cast<double>(x) - m);
  return static_cast<double>(row[target]) - m - std::log(z);
}

}  // namespace

std::vector<ClassificationTask> parse_tasks(std::string_view jsonl, const std::string& source) {
  std::vector<ClassificationTask> tasks;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      ClassificationTask t;
      t.prompt = rec.at("prompt").get<std::string>();
      t.options = rec.at("options").get<std::vector<std::string>>();
      const auto gold = rec.at("gold").get<std::int64_t>();
      if (t.options.size() < 2) throw ParseError(source, line_no, "fewer than two options");
      if (gold < 0 || static_cast<std::size_t>(gold) >= t.options.size()) {
        throw ParseError(source, line_no, "gold index out of range");
      }
      t.gold = static_cast<std::size_t>(gold);
      tasks.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  return tasks;
}

std::vector<ClassificationTask> load_tasks(const std::filesystem::path& path) {
  return parse_tasks(read_file(path), path.string());
}

OptionScores score_options(const model::CausalLm& lm, const tokenizer::Vocabulary& vocab,
                           const ClassificationTask& task, const ScoringOptions& options) {
  if (task.options.empty()) throw ValidationError("task has no options");
  const tokenizer::TokenIds prompt = tokenizer::encode(vocab, task.prompt);
  if (prompt.empty()) throw ValidationError("prompt encodes to no tokens");
  OptionScores out;
  for (const std::string& option : task.options) {
    const tokenizer::TokenIds opt = tokenizer::encode(vocab, option, {.add_prefix_marker = false});
    if (opt.empty()) throw ValidationError("option '" + option + "' encodes to no tokens");
    tokenizer::TokenIds ids = prompt;
    ids.insert(ids.end(), opt.begin(), opt.end());
    if (ids.size() > lm.max_context()) {
      throw ValidationError("prompt plus option needs " + std::to_string(ids.size()) +
                            " tokens, context is " + std::to_string(lm.max_context()));
    }
    const numerics::Tensor<float> logits = lm.logits(ids);
    double total = 0.0;
    for (std::size_t j = 0; j < opt.size(); ++j) {
      total += log_prob_of(logits.row(prompt.size() - 1 + j), opt[j]);
    }
    if (options.length_normalize) total /= static_cast<double>(option.size());
    out.log_probs.push_back(total);
  }
  // max_element returns the first maximum, which is the lowest index.
  out.predicted = static_cast<std::size_t>(
      std::max_element(out.log_probs.begin(), out.log_probs.end()) - out.log_probs.begin());
  return out;
}

Metrics compute_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                        std::size_t n_classes) {
  if (preds.size() != golds.size()) {
    throw ValidationError("compute_metrics: " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(golds.size()) + " labels");
  }
  if (preds.empty()) throw ValidationError("compute_metrics: no examples");
  if (n_classes == 0) throw ValidationError("compute_metrics: no classes");
  std::vector<std::size_t> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= n_classes || golds[i] >= n_classes) {
      throw ValidationError("compute_metrics: label out of range");
    }
    if (preds[i] == golds[i]) {
      ++correct;
      ++tp[preds[i]];
    } else {
      ++fp[preds[i]];
      ++fn[golds[i]];
    }
  }
  Metrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    const std::size_t denom = 2 * tp[c] + fp[c] + fn[c];
    const double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
    m.per_class_f1.push_back(f1);
    sum += f1;
  }
  m.macro_f1 = sum / static_cast<double>(n_classes);
  return m;
}

EvalResult evaluate(const model::CausalLm& lm, const tokenizer::Vocabulary& vocab,
                    std::span<const ClassificationTask> tasks, const ScoringOptions& options) {
  EvalResult r;
  std::size_t n_classes = 0;
  for (const auto& t : tasks) {
    r.predictions.push_back(score_options(lm, vocab, t, options).predicted);
    r.golds.push_back(t.gold);
    n_classes = std::max(n_classes, t.options.size());
  }
  r.metrics = compute_metrics(r.predictions, r.golds, n_classes);
  return r;
}

std::string metrics_csv(const EvalResult& result) {
  std::string out = "metric,value\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "n,%zu\n", result.predictions.size());
  out += buf;
  std::snprintf(buf, sizeof(buf), "accuracy,%.6f\n", result.metrics.accuracy);
  out += buf;
  std::snprintf(buf, sizeof(buf), "macro_f1,%.6f\n", result.metrics.macro_f1);
  out += buf;
  for (std::size_t c = 0; c < result.metrics.per_class_f1.size(); ++c) {
    std::snprintf(buf, sizeof(buf), "f1_class_%zu,%.6f\n", c, result.metrics.per_class_f1[c]);
    out += buf;
  }
  return out;
}

}  // namespace langadapt::eval
