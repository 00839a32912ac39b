#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "langadapt/model/causal_lm.hpp"
#include "langadapt/tokenizer/vocab.hpp"

namespace langadapt::eval {

struct ClassificationTask {
  std::string prompt;
  std::vector<std::string> options;
  std::size_t gold = 0;
};

// JSONL records {"prompt": str, "options": [str, ...], "gold": int}.
// Requires at least two options and gold in range; ParseError carries the
// line number.
std::vector<ClassificationTask> parse_tasks(std::string_view jsonl,
                                            const std::string& source = "<tasks>");
std::vector<ClassificationTask> load_tasks(const std::filesystem::path& path);

struct ScoringOptions {
  // Divide each option's log-probability by its UTF-8 byte length.
  bool length_normalize = false;
};

struct OptionScores {
  std::vector<double> log_probs;  // after optional normalisation
  std::size_t predicted = 0;
};

// Sum of log P(option token | prompt, earlier option tokens) per option,
// prompt encoded with the leading marker and option without. Argmax with
// the lowest index winning ties. Throws ValidationError when the task has
// no options, an option encodes to nothing, or prompt + option exceeds the
// model context.
OptionScores score_options(const model::CausalLm& lm, const tokenizer::Vocabulary& vocab,
                           const ClassificationTask& task, const ScoringOptions& options = {});

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> per_class_f1;
};

// Macro F1 is the unweighted mean over all n_classes; a class with no
// true positives scores 0. Throws ValidationError on length mismatch, empty
// input, or a label >= n_classes.
Metrics compute_metrics(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                        std::size_t n_classes);

struct EvalResult {
  std::vector<std::size_t> predictions;
  std::vector<std::size_t> golds;
  Metrics metrics;
};

// Scores every task; the class count is the largest option count.
EvalResult evaluate(const model::CausalLm& lm, const tokenizer::Vocabulary& vocab,
                    std::span<const ClassificationTask> tasks, const ScoringOptions& options = {});

// "metric,value" CSV with accuracy, macro_f1, n and f1_class_<k> rows.
std::string metrics_csv(const EvalResult& result);

}  // namespace langadapt::eval
