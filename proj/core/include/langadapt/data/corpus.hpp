#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/tokenizer/vocab.hpp"

namespace langadapt::data {

enum class Language { kKo, kEn };

std::string_view to_string(Language lang);
std::optional<Language> parse_language(std::string_view s);

struct CorpusShard {
  Language language = Language::kKo;
  std::filesystem::path path;
  std::uintmax_t byte_size = 0;
};

struct IngestResult {
  // Sorted by path.
  std::vector<CorpusShard> shards;
  std::map<Language, std::uintmax_t> bytes_per_language;
  std::vector<std::string> warnings;

  double fraction(Language lang) const;
};

// Scans root/{ko,en}/*.txt. A missing or empty language directory is a
// warning; an unreadable file is an IoError.
IngestResult ingest_corpus(const std::filesystem::path& root);

struct MixSpec {
  double ko_weight = 7.0;
  double en_weight = 3.0;
  std::size_t block_size = 64;
  std::uint64_t seed = 0;

  // Normalised probability of drawing a Korean block.
  double ko_probability() const;
  void validate() const;
};

struct TokenBlock {
  Language language = Language::kKo;
  std::vector<tokenizer::TokenId> ids;
};

// Endless stream of fixed-size single-language token blocks. The language
// of each block is a seeded weighted draw; each language's shards are
// tokenised on first use, joined with end-of-sequence separators, and
// cycled. Identical seeds give identical block sequences.
class MixStream {
 public:
  // Throws ValidationError when a language with positive weight has no
  // shards or the vocabulary has no end-of-sequence token.
  MixStream(std::vector<CorpusShard> shards, const tokenizer::Vocabulary& vocab, MixSpec spec);

  TokenBlock next();

  // Whole blocks available in one pass over every shard of the languages
  // with positive weight.
  std::size_t blocks_per_epoch();
  std::uint64_t tokens_emitted() const noexcept { return tokens_emitted_; }

 private:
  struct LanguageState {
    std::vector<CorpusShard> shards;
    std::vector<std::optional<std::vector<tokenizer::TokenId>>> encoded;
    std::size_t shard_cursor = 0;
    std::vector<tokenizer::TokenId> buffer;
    std::size_t buffer_pos = 0;
  };

  const std::vector<tokenizer::TokenId>& encoded_shard(LanguageState& state, std::size_t index);
  void refill(LanguageState& state, Language lang);

  const tokenizer::Vocabulary& vocab_;
  MixSpec spec_;
  tokenizer::TokenId eos_;
  std::map<Language, LanguageState> states_;
  std::mt19937_64 rng_;
  std::uint64_t tokens_emitted_ = 0;
};

}  // namespace langadapt::data
