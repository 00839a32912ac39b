#include "langadapt/util/utf8.hpp"

#include "langadapt/util/error.hpp"

namespace langadapt::utf8 {

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0u) == 0x80u; }

}  // namespace

std::size_t sequence_length(std::string_view text, std::size_t pos) {
  if (pos >= text.size()) {
    return 0;
  }
  const auto b0 = static_cast<unsigned char>(text[pos]);
  const std::size_t remaining = text.size() - pos;
  if (b0 < 0x80u) {
    return 1;
  }
  std::size_t len = 0;
  unsigned char lo = 0x80u;
  unsigned char hi = 0xBFu;
  if (b0 >= 0xC2u && b0 <= 0xDFu) {
    len = 2;
  } else if (b0 >= 0xE0u && b0 <= 0xEFu) {
    len = 3;
    if (b0 == 0xE0u) lo = 0xA0u;  // overlong
    if (b0 == 0xEDu) hi = 0x9Fu;  // surrogates
  } else if (b0 >= 0xF0u && b0 <= 0xF4u) {
    len = 4;
    if (b0 == 0xF0u) lo = 0x90u;
    if (b0 == 0xF4u) hi = 0x8Fu;
  } else {
    return 0;
  }
  if (remaining < len) {
    return 0;
  }
  const auto b1 = static_cast<unsigned char>(text[pos + 1]);
  if (b1 < lo || b1 > hi) {
    return 0;
  }
  for (std::size_t k = 2; k < len; ++k) {
    if (!is_continuation(static_cast<unsigned char>(text[pos + k]))) {
      return 0;
    }
  }
  return len;
}

bool is_valid(std::string_view text) {
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t len = sequence_length(text, pos);
    if (len == 0) {
      return false;
    }
    pos += len;
  }
  return true;
}

void validate(std::string_view text) {
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t len = sequence_length(text, pos);
    if (len == 0) {
      throw EncodingError("invalid UTF-8 at byte offset " + std::to_string(pos));
    }
    pos += len;
  }
}

std::size_t count_code_points(std::string_view text) {
  std::size_t n = 0;
  for (const char c : text) {
    if (!is_continuation(static_cast<unsigned char>(c))) {
      ++n;
    }
  }
  return n;
}

void append_code_point(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

std::string repair(std::string_view bytes) {
  std::string out;
  out.reserve(bytes.size());
  for (std::size_t pos = 0; pos < bytes.size();) {
    const std::size_t len = sequence_length(bytes, pos);
    if (len == 0) {
      out += kReplacementChar;
      ++pos;
    } else {
      out.append(bytes.substr(pos, len));
      pos += len;
    }
  }
  return out;
}

}  // namespace langadapt::utf8
