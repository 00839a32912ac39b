#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/data/corpus.hpp"
#include "langadapt/tokenizer/vocab.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::data {

struct InstructionExample {
  std::string instruction;
  std::string input;
  std::string output;
  Language lang = Language::kKo;
};

struct InstructionSet {
  std::vector<InstructionExample> examples;
  std::map<Language, std::size_t> counts;
};

// One JSON object per line with string fields instruction, input, output
// and lang ("ko" or "en"). input may be empty or absent. Blank lines are
// skipped. Any other defect raises ParseError carrying the 1-based line.
InstructionSet parse_instructions(std::string_view jsonl, const std::string& source = "<jsonl>");
InstructionSet load_instructions(const std::filesystem::path& path);

struct PromptTemplate {
  std::string text;
  std::string response_marker = "### Response:";

  // Substitutes the placeholders. With an empty input the blank-line
  // separated paragraph holding {input} is removed.
  std::string render(std::string_view instruction, std::string_view input) const;
};

// Template file contents become PromptTemplate::text. Throws ParseError if
// {instruction} or {response_marker} is missing.
PromptTemplate parse_template(std::string text, const std::string& source = "<template>");
PromptTemplate load_template(const std::filesystem::path& path);

struct RenderedExample {
  std::vector<tokenizer::TokenId> ids;
  // 1 marks a position whose token is scored.
  std::vector<std::uint8_t> loss_mask;
  std::size_t prompt_length = 0;

  std::size_t scored_count() const;
};

class OverlongError : public ValidationError {
 public:
  OverlongError(std::size_t length, std::size_t limit);
  std::size_t length() const noexcept { return length_; }

 private:
  std::size_t length_;
};

// The prompt is encoded with the leading marker, the output without it, and
// EOS is appended. The mask covers output and EOS. Throws OverlongError
// when the result exceeds max_seq tokens.
RenderedExample render_sft_example(const tokenizer::Vocabulary& vocab, const InstructionExample& ex,
                                   const PromptTemplate& tmpl, std::size_t max_seq);

struct RenderSummary {
  std::vector<RenderedExample> rendered;
  std::size_t skipped_overlong = 0;
};

RenderSummary render_all(const tokenizer::Vocabulary& vocab,
                         const std::vector<InstructionExample>& examples, const PromptTemplate& tmpl,
                         std::size_t max_seq);

}  // namespace langadapt::data
