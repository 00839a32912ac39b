#include "langadapt/data/instructions.hpp"

#include <algorithm>
#include <json.hpp>

#include "langadapt/tokenizer/tokenizer.hpp"
#include "langadapt/util/files.hpp"
#include "langadapt/util/utf8.hpp"

namespace langadapt::data {

namespace {

using json = nlohmann::json;

std::string required_string(const json& record, const char* key, const std::string& source,
                            std::size_t line) {
  const auto it = record.find(key);
  if (it == record.end()) {
    throw ParseError(source, line, std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) {
    throw ParseError(source, line, std::string("field '") + key + "' is not a string");
  }
  auto value = it->get<std::string>();
  if (!utf8::is_valid(value)) {
    throw ParseError(source, line, std::string("field '") + key + "' is not valid UTF-8");
  }
  return value;
}

void replace_all(std::string& text, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

InstructionSet parse_instructions(std::string_view jsonl, const std::string& source) {
  InstructionSet set;
  set.counts[Language::kKo] = 0;
  set.counts[Language::kEn] = 0;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    std::size_t end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    std::string_view line = jsonl.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == jsonl.size()) break;
      continue;
    }
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) {
      throw ParseError(source, line_no, "record is not a JSON object");
    }
    InstructionExample ex;
    ex.instruction = required_string(record, "instruction", source, line_no);
    ex.output = required_string(record, "output", source, line_no);
    if (record.contains("input") && !record["input"].is_null()) {
      ex.input = required_string(record, "input", source, line_no);
    }
    const std::string lang = required_string(record, "lang", source, line_no);
    const auto parsed = parse_language(lang);
    if (!parsed) {
      throw ParseError(source, line_no, "unknown lang '" + lang + "'");
    }
    ex.lang = *parsed;
    if (ex.instruction.empty()) {
      throw ParseError(source, line_no, "empty instruction");
    }
    if (ex.output.empty()) {
      throw ParseError(source, line_no, "empty output");
    }
    ++set.counts[ex.lang];
    set.examples.push_back(std::move(ex));
    if (end == jsonl.size()) break;
  }
  return set;
}

InstructionSet load_instructions(const std::filesystem::path& path) {
  return parse_instructions(read_file(path), path.string());
}

std::string PromptTemplate::render(std::string_view instruction, std::string_view input) const {
  std::string out = text;
  if (input.empty()) {
    const std::size_t at = out.find("{input}");
    if (at != std::string::npos) {
      std::size_t para_start = out.rfind("\n\n", at);
      para_start = para_start == std::string::npos ? 0 : para_start + 2;
      std::size_t para_end = out.find("\n\n", at);
      para_end = para_end == std::string::npos ? out.size() : para_end + 2;
      out.erase(para_start, para_end - para_start);
    }
  }
  replace_all(out, "{response_marker}", response_marker);
  // Substituted values are not rescanned, so braces inside them survive.
  std::string result;
  std::size_t pos = 0;
  while (pos < out.size()) {
    if (out.compare(pos, 13, "{instruction}") == 0) {
      result += instruction;
      pos += 13;
    } else if (out.compare(pos, 7, "{input}") == 0) {
      result += input;
      pos += 7;
    } else {
      result += out[pos++];
    }
  }
  return result;
}

PromptTemplate parse_template(std::string text, const std::string& source) {
  if (text.find("{instruction}") == std::string::npos) {
    throw ParseError(source, 1, "template lacks {instruction}");
  }
  if (text.find("{response_marker}") == std::string::npos) {
    throw ParseError(source, 1, "template lacks {response_marker}");
  }
  if (!utf8::is_valid(text)) {
    throw ParseError(source, 1, "template is not valid UTF-8");
  }
  PromptTemplate tmpl;
  tmpl.text = std::move(text);
  return tmpl;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  return parse_template(read_file(path), path.string());
}

std::size_t RenderedExample::scored_count() const {
  return static_cast<std::size_t>(std::count(loss_mask.begin(), loss_mask.end(), 1));
}

OverlongError::OverlongError(std::size_t length, std::size_t limit)
    : ValidationError("rendered example has " + std::to_string(length) + " tokens, limit " +
                      std::to_string(limit)),
      length_(length) {}

RenderedExample render_sft_example(const tokenizer::Vocabulary& vocab, const InstructionExample& ex,
                                   const PromptTemplate& tmpl, std::size_t max_seq) {
  const auto eos = vocab.eos_id();
  if (!eos) {
    throw ValidationError("vocabulary has no end-of-sequence token");
  }
  if (ex.output.empty()) {
    throw ValidationError("example has empty output");
  }
  RenderedExample r;
  r.ids = tokenizer::encode(vocab, tmpl.render(ex.instruction, ex.input));
  r.prompt_length = r.ids.size();
  const auto out_ids = tokenizer::encode(vocab, ex.output, {.add_prefix_marker = false});
  r.ids.insert(r.ids.end(), out_ids.begin(), out_ids.end());
  r.ids.push_back(*eos);
  if (r.ids.size() > max_seq) {
    throw OverlongError(r.ids.size(), max_seq);
  }
  r.loss_mask.assign(r.ids.size(), 0);
  std::fill(r.loss_mask.begin() + static_cast<std::ptrdiff_t>(r.prompt_length), r.loss_mask.end(),
            std::uint8_t{1});
  return r;
}

RenderSummary render_all(const tokenizer::Vocabulary& vocab,
                         const std::vector<InstructionExample>& examples, const PromptTemplate& tmpl,
                         std::size_t max_seq) {
  RenderSummary summary;
  for (const auto& ex : examples) {
    try {
      summary.rendered.push_back(render_sft_example(vocab, ex, tmpl, max_seq));
    } catch (const OverlongError&) {
      ++summary.skipped_overlong;
    }
  }
  return summary;
}

}  // namespace langadapt::data
