#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace langadapt::utf8 {

// Length in bytes of the well-formed sequence starting at text[pos], or 0
// if the bytes there are not a well-formed UTF-8 sequence (overlong forms,
// surrogates and values above U+10FFFF are rejected).
std::size_t sequence_length(std::string_view text, std::size_t pos);

bool is_valid(std::string_view text);

// Throws EncodingError naming the first bad byte offset.
void validate(std::string_view text);

std::size_t count_code_points(std::string_view text);

void append_code_point(std::string& out, char32_t cp);

// Reassembles a raw byte run. Well-formed sequences are copied through;
// each byte that does not start a well-formed sequence becomes U+FFFD.
std::string repair(std::string_view bytes);

inline constexpr std::string_view kReplacementChar = "\xEF\xBF\xBD";

}  // namespace langadapt::utf8
