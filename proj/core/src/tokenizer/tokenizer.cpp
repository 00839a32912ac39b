#include "langadapt/tokenizer/tokenizer.hpp"

#include <algorithm>
#include <bitset>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "langadapt/util/error.hpp"
#include "langadapt/util/utf8.hpp"

namespace langadapt::tokenizer {

namespace {

enum class UnitKind {
  kPrefixMarker,  // the marker prefixed at text start
  kSpaceMarker,   // a marker replacing an input space
  kLiteral,       // any other character
  kForced,        // a literal U+2581 in the input, never matched
};

struct Unit {
  std::size_t begin = 0;  // byte offset into the normalized string
  std::size_t length = 0;
  UnitKind kind = UnitKind::kLiteral;
};

struct Normalized {
  std::string text;
  std::vector<Unit> units;
};

Normalized normalize(std::string_view input, bool add_prefix) {
  Normalized out;
  out.text.reserve(input.size() + 3 * (input.size() / 4 + 1));
  auto push = [&](std::string_view bytes, UnitKind kind) {
    out.units.push_back({out.text.size(), bytes.size(), kind});
    out.text.append(bytes);
  };
  if (add_prefix && !input.empty()) {
    push(kWhitespaceMarker, UnitKind::kPrefixMarker);
  }
  for (std::size_t pos = 0; pos < input.size();) {
    const std::size_t len = utf8::sequence_length(input, pos);
    const std::string_view ch = input.substr(pos, len);
    if (ch == " ") {
      push(kWhitespaceMarker, UnitKind::kSpaceMarker);
    } else if (ch == kWhitespaceMarker) {
      push(ch, UnitKind::kForced);
    } else {
      push(ch, UnitKind::kLiteral);
    }
    pos += len;
  }
  return out;
}

// One step of segmentation: either a normal match spanning `units` units or
// byte fallback of a single unit.
struct Step {
  std::optional<TokenId> match;
  std::size_t units = 1;
};

Step longest_match(const Vocabulary& vocab, const Normalized& norm, std::size_t u) {
  Step best;
  const std::size_t begin = norm.units[u].begin;
  std::size_t length = 0;
  std::string candidate;
  for (std::size_t v = u; v < norm.units.size(); ++v) {
    const Unit& unit = norm.units[v];
    if (unit.kind == UnitKind::kForced) {
      break;
    }
    length += unit.length;
    if (length > vocab.max_normal_length()) {
      break;
    }
    candidate.assign(norm.text, begin, length);
    if (auto id = vocab.find(candidate, EntryKind::kNormal)) {
      best.match = id;
      best.units = v - u + 1;
    }
  }
  return best;
}

struct Piece {
  TokenIds ids;
  bool byte_fallback = false;
  std::string source;  // the original character for byte-fallback pieces
};

std::vector<Piece> segment(const Vocabulary& vocab, std::string_view text, EncodeOptions options) {
  utf8::validate(text);
  const Normalized norm = normalize(text, options.add_prefix_marker);
  std::vector<Piece> pieces;
  std::size_t u = 0;
  while (u < norm.units.size()) {
    const Unit& unit = norm.units[u];
    const Step step = longest_match(vocab, norm, u);
    if (unit.kind == UnitKind::kPrefixMarker) {
      const bool bare = !step.match || step.units == 1;
      if (bare) {
        const bool text_starts_with_space = text.front() == ' ';
        bool keep = false;
        if (step.match && u + 1 < norm.units.size()) {
          keep = text_starts_with_space || !longest_match(vocab, norm, u + 1).match;
        }
        if (keep) {
          pieces.push_back({{*step.match}, false, {}});
        }
        ++u;
        continue;
      }
    }
    if (step.match) {
      pieces.push_back({{*step.match}, false, {}});
      u += step.units;
      continue;
    }
    Piece piece;
    piece.byte_fallback = true;
    if (unit.kind == UnitKind::kSpaceMarker) {
      piece.source = " ";
    } else {
      piece.source = norm.text.substr(unit.begin, unit.length);
    }
    for (const char c : piece.source) {
      piece.ids.push_back(vocab.byte_id(static_cast<unsigned char>(c)));
    }
    pieces.push_back(std::move(piece));
    ++u;
  }
  return pieces;
}

void replace_markers(std::string& s) {
  std::size_t pos = 0;
  while ((pos = s.find(kWhitespaceMarker, pos)) != std::string::npos) {
    s.replace(pos, kWhitespaceMarker.size(), " ");
    pos += 1;
  }
}

}  // namespace

TokenIds encode(const Vocabulary& vocab, std::string_view text, EncodeOptions options) {
  TokenIds out;
  out.reserve(text.size());
  for (const Piece& piece : segment(vocab, text, options)) {
    out.insert(out.end(), piece.ids.begin(), piece.ids.end());
  }
  return out;
}

std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids, DecodeOptions options) {
  std::string out;
  std::string pending;
  bool at_start = true;
  auto flush = [&] {
    if (!pending.empty()) {
      out += utf8::repair(pending);
      pending.clear();
    }
  };
  for (const TokenId id : ids) {
    const VocabEntry& entry = vocab.at(id);
    switch (entry.kind) {
      case EntryKind::kByte:
        pending.push_back(entry.surface[0]);
        at_start = false;
        break;
      case EntryKind::kControl:
        flush();
        break;
      case EntryKind::kNormal: {
        flush();
        std::string piece = entry.surface;
        if (at_start && options.strip_prefix_marker && piece.starts_with(kWhitespaceMarker)) {
          piece.erase(0, kWhitespaceMarker.size());
        }
        replace_markers(piece);
        out += piece;
        at_start = false;
        break;
      }
    }
  }
  flush();
  return out;
}

std::string render_tokens(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) {
      out += ' ';
    }
    out += vocab.at(ids[i]).rendered();
  }
  return out;
}

FertilityStats fertility_report(const Vocabulary& vocab, std::istream& corpus) {
  FertilityStats stats;
  std::map<std::string, std::bitset<256>> fallback_chars;
  std::string line;
  while (std::getline(corpus, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    stats.characters += utf8::count_code_points(line);
    if (line.empty()) {
      continue;
    }
    for (const Piece& piece : segment(vocab, line, {})) {
      stats.tokens += piece.ids.size();
      if (piece.byte_fallback) {
        stats.byte_tokens += piece.ids.size();
        auto& bytes = fallback_chars[piece.source];
        for (const char c : piece.source) {
          bytes.set(static_cast<unsigned char>(c));
        }
      }
    }
  }
  if (stats.characters == 0) {
    throw ValidationError("fertility report needs a nonempty corpus");
  }
  stats.tokens_per_character =
      static_cast<double>(stats.tokens) / static_cast<double>(stats.characters);
  stats.byte_fallback_fraction =
      stats.tokens == 0 ? 0.0
                        : static_cast<double>(stats.byte_tokens) / static_cast<double>(stats.tokens);
  stats.byte_encoded_characters = fallback_chars.size();
  // A byte value used by two or more distinct characters marks all of them.
  std::size_t users[256] = {};
  for (const auto& [ch, bytes] : fallback_chars) {
    for (std::size_t b = 0; b < 256; ++b) {
      if (bytes.test(b)) {
        ++users[b];
      }
    }
  }
  for (const auto& [ch, bytes] : fallback_chars) {
    for (std::size_t b = 0; b < 256; ++b) {
      if (bytes.test(b) && users[b] > 1) {
        ++stats.duplicated_characters;
        break;
      }
    }
  }
  return stats;
}

FertilityStats fertility_report(const Vocabulary& vocab, std::string_view corpus) {
  std::istringstream in{std::string(corpus)};
  return fertility_report(vocab, in);
}

}  // namespace langadapt::tokenizer
