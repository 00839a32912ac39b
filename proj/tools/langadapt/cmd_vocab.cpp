#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "commands.hpp"
#include "langadapt/tokenizer/tokenizer.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::cli {

namespace {

using json = nlohmann::json;

struct MergeArgs {
  std::string base, ext, out, report;
};

struct ReportArgs {
  std::string vocab, corpus, text, out;
};

struct TokenizeArgs {
  std::string vocab, text, file;
  bool ids = false;
  bool no_prefix = false;
};

json merge_report_json(const tokenizer::MergeReport& r) {
  return {{"base_size", r.base_size},
          {"extension_size", r.extension_size},
          {"duplicates_skipped", r.duplicates_skipped},
          {"added", r.added},
          {"merged_size", r.merged_size}};
}

void run_merge(const MergeArgs& a) {
  const auto base = tokenizer::load_vocab(a.base);
  const auto ext = tokenizer::load_vocab(a.ext);
  const auto [merged, report] = tokenizer::merge_vocab(base, ext);
  tokenizer::save_vocab(merged, a.out);
  const std::string text = merge_report_json(report).dump(2) + "\n";
  if (a.report.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_file_atomic(a.report, text);
  }
}

void run_report(const ReportArgs& a) {
  const auto vocab = tokenizer::load_vocab(a.vocab);
  tokenizer::FertilityStats s;
  if (!a.text.empty()) {
    s = tokenizer::fertility_report(vocab, a.text);
  } else {
    std::ifstream in(a.corpus, std::ios::binary);
    if (!in) throw IoError("cannot open " + a.corpus);
    s = tokenizer::fertility_report(vocab, in);
  }
  const json j{{"characters", s.characters},
               {"tokens", s.tokens},
               {"byte_tokens", s.byte_tokens},
               {"tokens_per_character", s.tokens_per_character},
               {"byte_fallback_fraction", s.byte_fallback_fraction},
               {"byte_encoded_characters", s.byte_encoded_characters},
               {"duplicated_characters", s.duplicated_characters}};
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    std::fputs(text.c_str(), stdout);
  } else {
    write_file_atomic(a.out, text);
  }
}

void run_tokenize(const TokenizeArgs& a) {
  const auto vocab = tokenizer::load_vocab(a.vocab);
  const std::string text = a.file.empty() ? a.text : read_file(a.file);
  const auto ids = tokenizer::encode(vocab, text, {.add_prefix_marker = !a.no_prefix});
  if (a.ids) {
    std::string line;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) line += ' ';
      line += std::to_string(ids[i]);
    }
    std::printf("%s\n", line.c_str());
  } else {
    std::printf("%s\n", tokenizer::render_tokens(vocab, ids).c_str());
  }
}

}  // namespace

void add_vocab_commands(CLI::App& app) {
  auto* vocab = app.add_subcommand("vocab", "Vocabulary merging and tokenization reports");
  vocab->require_subcommand(1);

  auto merge_args = std::make_shared<MergeArgs>();
  auto* merge = vocab->add_subcommand("merge", "Append novel extension entries to a base vocabulary");
  merge->add_option("--base", merge_args->base, "Base vocabulary file")->required()->check(CLI::ExistingFile);
  merge->add_option("--ext", merge_args->ext, "Extension vocabulary file")->required()->check(CLI::ExistingFile);
  merge->add_option("--out", merge_args->out, "Merged vocabulary output")->required();
  merge->add_option("--report", merge_args->report, "Merge report JSON output (stdout if omitted)");
  merge->callback([merge_args] { run_merge(*merge_args); });

  auto report_args = std::make_shared<ReportArgs>();
  auto* report = vocab->add_subcommand("report", "Fertility and byte-fallback statistics");
  report->add_option("--vocab", report_args->vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  auto* corpus = report->add_option("--corpus", report_args->corpus, "UTF-8 text file")->check(CLI::ExistingFile);
  auto* text = report->add_option("--text", report_args->text, "Literal text instead of a file");
  corpus->excludes(text);
  report->add_option("--out", report_args->out, "JSON output (stdout if omitted)");
  report->callback([report_args] {
    if (report_args->corpus.empty() && report_args->text.empty()) {
      throw CLI::RequiredError("--corpus or --text");
    }
    run_report(*report_args);
  });

  auto tok_args = std::make_shared<TokenizeArgs>();
  auto* tokenize = app.add_subcommand("tokenize", "Encode text and print its tokens");
  tokenize->add_option("--vocab", tok_args->vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  auto* tok_text = tokenize->add_option("--text", tok_args->text, "Text to encode");
  auto* tok_file = tokenize->add_option("--file", tok_args->file, "File to encode")->check(CLI::ExistingFile);
  tok_text->excludes(tok_file);
  tokenize->add_flag("--ids", tok_args->ids, "Print ids instead of token surfaces");
  tokenize->add_flag("--no-prefix", tok_args->no_prefix, "Do not prepend the word-boundary marker");
  tokenize->callback([tok_args, tok_text, tok_file] {
    if (tok_text->count() == 0 && tok_file->count() == 0) {
      throw CLI::RequiredError("--text or --file");
    }
    run_tokenize(*tok_args);
  });
}

}  // namespace langadapt::cli
