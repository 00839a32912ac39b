#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace langadapt::tokenizer {

using TokenId = std::uint32_t;

enum class EntryKind { kNormal, kByte, kControl };

std::string_view to_string(EntryKind kind);

// The word-boundary symbol U+2581 that stands in for a space.
inline constexpr std::string_view kWhitespaceMarker = "\xE2\x96\x81";

inline constexpr std::string_view kBosName = "<s>";
inline constexpr std::string_view kEosName = "</s>";
inline constexpr std::string_view kUnkName = "<unk>";
inline constexpr std::string_view kPadName = "<pad>";

struct VocabEntry {
  // Raw UTF-8 fragment for normal entries, exactly one raw byte for byte
  // entries, and the symbolic name (e.g. "</s>") for control entries.
  std::string surface;
  double score = 0.0;
  EntryKind kind = EntryKind::kNormal;
  TokenId id = 0;

  // Display form: byte entries as <0xHH>, everything else verbatim.
  std::string rendered() const;
};

struct MergeReport {
  std::size_t base_size = 0;
  std::size_t extension_size = 0;
  std::size_t duplicates_skipped = 0;
  std::size_t added = 0;
  std::size_t merged_size = 0;
};

// Immutable ordered token inventory. Ids are dense and equal list positions;
// exactly one byte entry exists per byte value; (surface, kind) is unique.
class Vocabulary {
 public:
  // Validates every invariant; throws ValidationError on violation.
  explicit Vocabulary(std::vector<VocabEntry> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  const VocabEntry& at(TokenId id) const;
  const std::vector<VocabEntry>& entries() const noexcept { return entries_; }

  std::optional<TokenId> find(std::string_view surface, EntryKind kind) const;
  TokenId byte_id(unsigned char value) const noexcept { return byte_ids_[value]; }
  std::optional<TokenId> control_id(std::string_view name) const {
    return find(name, EntryKind::kControl);
  }
  std::optional<TokenId> eos_id() const { return control_id(kEosName); }
  std::optional<TokenId> bos_id() const { return control_id(kBosName); }

  // Longest normal surface in bytes; bounds the greedy matcher.
  std::size_t max_normal_length() const noexcept { return max_normal_length_; }
  std::string_view whitespace_marker() const noexcept { return kWhitespaceMarker; }

  // Serialises in the vocab text format accepted by parse_vocab.
  std::string to_text() const;

  bool operator==(const Vocabulary& other) const;

 private:
  struct KeyHash {
    std::size_t operator()(const std::pair<std::string, EntryKind>& key) const noexcept;
  };

  std::vector<VocabEntry> entries_;
  std::unordered_map<std::pair<std::string, EntryKind>, TokenId, KeyHash> index_;
  TokenId byte_ids_[256] = {};
  std::size_t max_normal_length_ = 0;
};

// Parses the line format `surface<TAB>score<TAB>kind`. `source` names the
// input in diagnostics.
Vocabulary parse_vocab(std::string_view text, const std::string& source = "<vocab>");
Vocabulary load_vocab(const std::filesystem::path& path);
void save_vocab(const Vocabulary& vocab, const std::filesystem::path& path);

// Appends extension entries whose (surface, kind) is absent from base, in
// extension order. Base ids are preserved exactly.
std::pair<Vocabulary, MergeReport> merge_vocab(const Vocabulary& base, const Vocabulary& extension);

}  // namespace langadapt::tokenizer
