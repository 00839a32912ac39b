#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/tokenizer/vocab.hpp"

namespace langadapt::tokenizer {

using TokenIds = std::vector<TokenId>;

struct EncodeOptions {
  // Prefix one whitespace marker at the start of the text. Turned off when
  // encoding a continuation that is appended to an already-encoded prompt.
  bool add_prefix_marker = true;
};

struct DecodeOptions {
  // Drop the marker that encode() prefixed.
  bool strip_prefix_marker = true;
};

// Greedy longest-match segmentation with UTF-8 byte fallback.
//
// Spaces become the whitespace marker and one marker is prefixed. At each
// position the longest normal surface is taken; a position with no match
// emits the byte entries of that character (a marker standing for a space
// falls back to byte 0x20). A literal U+2581 in the input is always byte
// encoded so it cannot be confused with a space.
//
// The prefixed marker is only emitted when it is part of a longer surface
// or when the text starts with a space or a byte-fallback character; a bare
// prefix in front of a whole-token match is dropped. This reproduces the
// way SentencePiece renders Korean text for both the base and the expanded
// vocabulary.
//
// Throws EncodingError on invalid UTF-8.
TokenIds encode(const Vocabulary& vocab, std::string_view text, EncodeOptions options = {});

// Inverse of encode. Contiguous byte entries are reassembled; malformed
// runs become U+FFFD. Control entries render as empty. Throws
// ValidationError on an out-of-range id.
std::string decode(const Vocabulary& vocab, std::span<const TokenId> ids, DecodeOptions options = {});

// Space-separated display form, e.g. "▁ <0xED> <0x96> 를".
std::string render_tokens(const Vocabulary& vocab, std::span<const TokenId> ids);

struct FertilityStats {
  std::size_t characters = 0;
  std::size_t tokens = 0;
  std::size_t byte_tokens = 0;
  double tokens_per_character = 0.0;
  double byte_fallback_fraction = 0.0;
  // Distinct byte-encoded characters that share at least one byte token
  // with another distinct character.
  std::size_t duplicated_characters = 0;
  // Distinct characters that needed byte fallback at all.
  std::size_t byte_encoded_characters = 0;
};

// Encodes the corpus line by line. Throws ValidationError if the corpus
// holds no characters.
FertilityStats fertility_report(const Vocabulary& vocab, std::istream& corpus);
FertilityStats fertility_report(const Vocabulary& vocab, std::string_view corpus);

}  // namespace langadapt::tokenizer
