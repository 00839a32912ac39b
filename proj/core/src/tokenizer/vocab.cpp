#include "langadapt/tokenizer/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <set>

#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"
#include "langadapt/util/utf8.hpp"

namespace langadapt::tokenizer {

std::string_view to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::kNormal:
      return "normal";
    case EntryKind::kByte:
      return "byte";
    case EntryKind::kControl:
      return "control";
  }
  return "normal";
}

namespace {

std::optional<EntryKind> parse_kind(std::string_view s) {
  if (s == "normal") return EntryKind::kNormal;
  if (s == "byte") return EntryKind::kByte;
  if (s == "control") return EntryKind::kControl;
  return std::nullopt;
}

std::string render_byte(unsigned char value) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "<0x%02X>", value);
  return buf;
}

std::optional<unsigned char> parse_byte_surface(std::string_view s) {
  if (s.size() != 6 || s.substr(0, 3) != "<0x" || s[5] != '>') {
    return std::nullopt;
  }
  unsigned value = 0;
  const char* first = s.data() + 3;
  const char* last = s.data() + 5;
  auto [ptr, ec] = std::from_chars(first, last, value, 16);
  if (ec != std::errc() || ptr != last || value > 0xFF) {
    return std::nullopt;
  }
  return static_cast<unsigned char>(value);
}

std::optional<double> parse_score(std::string_view s) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

struct ParsedLine {
  std::string surface;
  double score;
  EntryKind kind;
};

// Returns nullopt when the line is not a well-formed entry; `why` says why.
std::optional<ParsedLine> parse_entry_line(std::string_view line, std::string& why) {
  const auto fields = split_tabs(line);
  if (fields.size() != 3) {
    why = "expected 3 tab-separated fields, found " + std::to_string(fields.size());
    return std::nullopt;
  }
  const auto kind = parse_kind(fields[2]);
  if (!kind) {
    why = "unknown kind '" + std::string(fields[2]) + "'";
    return std::nullopt;
  }
  const auto score = parse_score(fields[1]);
  if (!score) {
    why = "bad score '" + std::string(fields[1]) + "'";
    return std::nullopt;
  }
  ParsedLine out{std::string(fields[0]), *score, *kind};
  if (*kind == EntryKind::kByte) {
    const auto value = parse_byte_surface(fields[0]);
    if (!value) {
      why = "byte surface must be written <0xHH>, got '" + std::string(fields[0]) + "'";
      return std::nullopt;
    }
    out.surface = std::string(1, static_cast<char>(*value));
  }
  return out;
}

}  // namespace

std::string VocabEntry::rendered() const {
  if (kind == EntryKind::kByte) {
    return render_byte(static_cast<unsigned char>(surface.at(0)));
  }
  return surface;
}

std::size_t Vocabulary::KeyHash::operator()(
    const std::pair<std::string, EntryKind>& key) const noexcept {
  return std::hash<std::string>{}(key.first) * 31u + static_cast<std::size_t>(key.second);
}

Vocabulary::Vocabulary(std::vector<VocabEntry> entries) : entries_(std::move(entries)) {
  std::size_t byte_count = 0;
  bool seen_byte[256] = {};
  index_.reserve(entries_.size());
  for (std::size_t pos = 0; pos < entries_.size(); ++pos) {
    const VocabEntry& e = entries_[pos];
    const std::string where = "entry " + std::to_string(pos);
    if (e.id != pos) {
      throw ValidationError(where + ": id " + std::to_string(e.id) + " does not match position");
    }
    switch (e.kind) {
      case EntryKind::kByte: {
        if (e.surface.size() != 1) {
          throw ValidationError(where + ": byte entry must hold exactly one byte");
        }
        const auto value = static_cast<unsigned char>(e.surface[0]);
        if (seen_byte[value]) {
          throw ValidationError(where + ": duplicate byte entry " + e.rendered());
        }
        seen_byte[value] = true;
        byte_ids_[value] = e.id;
        ++byte_count;
        break;
      }
      case EntryKind::kControl:
        if (e.surface.empty()) {
          throw ValidationError(where + ": control entry needs a name");
        }
        break;
      case EntryKind::kNormal:
        if (e.surface.empty()) {
          throw ValidationError(where + ": empty normal surface");
        }
        if (!utf8::is_valid(e.surface)) {
          throw ValidationError(where + ": normal surface is not valid UTF-8");
        }
        max_normal_length_ = std::max(max_normal_length_, e.surface.size());
        break;
    }
    const auto [it, inserted] = index_.emplace(std::make_pair(e.surface, e.kind), e.id);
    if (!inserted) {
      throw ValidationError(where + ": duplicate " + std::string(to_string(e.kind)) +
                            " surface '" + e.rendered() + "'");
    }
  }
  if (byte_count != 256) {
    throw ValidationError("vocabulary has " + std::to_string(byte_count) +
                          " byte entries; all 256 byte values are required");
  }
}

const VocabEntry& Vocabulary::at(TokenId id) const {
  if (id >= entries_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                          std::to_string(entries_.size()));
  }
  return entries_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view surface, EntryKind kind) const {
  const auto it = index_.find(std::make_pair(std::string(surface), kind));
  if (it == index_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::string Vocabulary::to_text() const {
  std::string out;
  for (const VocabEntry& e : entries_) {
    if (e.kind != EntryKind::kByte &&
        (e.surface.find_first_of("\t\n\r") != std::string::npos)) {
      throw ValidationError("surface of entry " + std::to_string(e.id) +
                            " contains a tab or newline and cannot be written");
    }
    char score[64];
    std::snprintf(score, sizeof(score), "%.17g", e.score);
    out += e.rendered();
    out += '\t';
    out += score;
    out += '\t';
    out += to_string(e.kind);
    out += '\n';
  }
  return out;
}

bool Vocabulary::operator==(const Vocabulary& other) const {
  if (entries_.size() != other.entries_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.surface != b.surface || a.kind != b.kind || a.id != b.id || a.score != b.score) {
      return false;
    }
  }
  return true;
}

Vocabulary parse_vocab(std::string_view text, const std::string& source) {
  std::vector<VocabEntry> entries;
  std::set<std::pair<std::string, EntryKind>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
    }
    if (line.empty()) {
      continue;
    }
    std::string why;
    auto parsed = parse_entry_line(line, why);
    if (!parsed) {
      // '#' lines are comments unless they parse as an entry ("#" itself is
      // a legitimate surface).
      if (line.front() == '#') {
        continue;
      }
      throw ParseError(source, line_no, why);
    }
    if (!seen.emplace(parsed->surface, parsed->kind).second) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": duplicate surface '" +
                            std::string(line.substr(0, line.find('\t'))) + "'");
    }
    VocabEntry entry;
    entry.surface = std::move(parsed->surface);
    entry.score = parsed->score;
    entry.kind = parsed->kind;
    entry.id = static_cast<TokenId>(entries.size());
    entries.push_back(std::move(entry));
  }
  return Vocabulary(std::move(entries));
}

Vocabulary load_vocab(const std::filesystem::path& path) {
  return parse_vocab(read_file(path), path.string());
}

void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path) {
  write_file_atomic(path, vocab.to_text());
}

std::pair<Vocabulary, MergeReport> merge_vocab(const Vocabulary& base, const Vocabulary& extension) {
  std::vector<VocabEntry> merged = base.entries();
  MergeReport report;
  report.base_size = base.size();
  report.extension_size = extension.size();
  for (const VocabEntry& e : extension.entries()) {
    if (base.find(e.surface, e.kind)) {
      ++report.duplicates_skipped;
      continue;
    }
    VocabEntry copy = e;
    copy.id = static_cast<TokenId>(merged.size());
    merged.push_back(std::move(copy));
    ++report.added;
  }
  report.merged_size = merged.size();
  return {Vocabulary(std::move(merged)), report};
}

}  // namespace langadapt::tokenizer
