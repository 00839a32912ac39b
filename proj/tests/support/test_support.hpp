#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "langadapt/tokenizer/vocab.hpp"
#include "langadapt/util/utf8.hpp"

namespace langadapt::testing {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(LANGADAPT_FIXTURE_DIR) / rel;
}

inline const tokenizer::Vocabulary& base_vocab() {
  static const tokenizer::Vocabulary v = tokenizer::load_vocab(fixture("llama2_subset.vocab"));
  return v;
}

inline const tokenizer::Vocabulary& ext_vocab() {
  static const tokenizer::Vocabulary v = tokenizer::load_vocab(fixture("ko_subset.vocab"));
  return v;
}

inline const tokenizer::Vocabulary& merged_vocab() {
  static const tokenizer::Vocabulary v = tokenizer::merge_vocab(base_vocab(), ext_vocab()).first;
  return v;
}

// Seeded random UTF-8 mixing Hangul, Latin, spaces, emoji, control
// characters and the literal whitespace marker.
inline std::string random_text(std::mt19937_64& rng, std::size_t max_chars = 24) {
  static constexpr char32_t kPool[] = {U'햄', U'버', U'거', U'를', U'먹', U'는', U'공', U'룡',
                                       U'한', U'국', U'어', U'a', U'e', U't', U'h', U'T',
                                       U' ', U' ', U'.', U',', U'\n', U'\t', U'\x01', U'\x7f',
                                       U'\u2581', U'\U0001F600', U'\U0001F996', U'é', U'中'};
  std::string out;
  const std::size_t n = rng() % (max_chars + 1);
  for (std::size_t i = 0; i < n; ++i) {
    char32_t cp;
    switch (rng() % 5) {
      case 0:
        cp = static_cast<char32_t>(0xAC00 + rng() % 11172);
        break;
      case 1:
        cp = static_cast<char32_t>(0x20 + rng() % 0x5F);
        break;
      default:
        cp = kPool[rng() % std::size(kPool)];
    }
    utf8::append_code_point(out, cp);
  }
  return out;
}

// Fresh directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("langadapt-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) +
             "-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace langadapt::testing
