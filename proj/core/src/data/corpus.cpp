#include "langadapt/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <system_error>

#include "langadapt/tokenizer/tokenizer.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::data {

namespace fs = std::filesystem;

std::string_view to_string(Language lang) { return lang == Language::kKo ? "ko" : "en"; }

std::optional<Language> parse_language(std::string_view s) {
  if (s == "ko") return Language::kKo;
  if (s == "en") return Language::kEn;
  return std::nullopt;
}

double IngestResult::fraction(Language lang) const {
  std::uintmax_t total = 0;
  for (const auto& [l, bytes] : bytes_per_language) total += bytes;
  if (total == 0) return 0.0;
  const auto it = bytes_per_language.find(lang);
  return it == bytes_per_language.end() ? 0.0
                                        : static_cast<double>(it->second) / static_cast<double>(total);
}

IngestResult ingest_corpus(const fs::path& root) {
  IngestResult result;
  if (!fs::is_directory(root)) {
    throw IoError("corpus root " + root.string() + " is not a directory");
  }
  for (const Language lang : {Language::kKo, Language::kEn}) {
    const fs::path dir = root / std::string(to_string(lang));
    result.bytes_per_language[lang] = 0;
    if (!fs::is_directory(dir)) {
      result.warnings.push_back("no " + std::string(to_string(lang)) + " directory under " +
                                root.string());
      continue;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      result.warnings.push_back("language directory " + dir.string() + " has no .txt files");
    }
    for (const fs::path& file : files) {
      std::error_code ec;
      const auto size = fs::file_size(file, ec);
      if (ec) {
        throw IoError("cannot stat " + file.string() + ": " + ec.message());
      }
      // Opening proves readability before any training starts.
      (void)read_file(file);
      result.shards.push_back({lang, file, size});
      result.bytes_per_language[lang] += size;
    }
  }
  std::sort(result.shards.begin(), result.shards.end(),
            [](const CorpusShard& a, const CorpusShard& b) { return a.path < b.path; });
  return result;
}

double MixSpec::ko_probability() const { return ko_weight / (ko_weight + en_weight); }

void MixSpec::validate() const {
  if (ko_weight < 0.0 || en_weight < 0.0 || !(ko_weight + en_weight > 0.0) ||
      !std::isfinite(ko_weight) || !std::isfinite(en_weight)) {
    throw ValidationError("mix weights must be non-negative and not both zero");
  }
  if (block_size == 0) {
    throw ValidationError("block_size must be positive");
  }
}

MixStream::MixStream(std::vector<CorpusShard> shards, const tokenizer::Vocabulary& vocab,
                     MixSpec spec)
    : vocab_(vocab), spec_(spec), eos_(0), rng_(spec.seed) {
  spec_.validate();
  const auto eos = vocab.eos_id();
  if (!eos) {
    throw ValidationError("vocabulary has no end-of-sequence token");
  }
  eos_ = *eos;
  for (CorpusShard& shard : shards) {
    states_[shard.language].shards.push_back(std::move(shard));
  }
  for (auto& [lang, state] : states_) {
    state.encoded.resize(state.shards.size());
  }
  const auto require = [&](Language lang, double weight) {
    if (weight > 0.0 && states_[lang].shards.empty()) {
      throw ValidationError("mix weight for " + std::string(to_string(lang)) +
                            " is positive but no shards exist");
    }
  };
  require(Language::kKo, spec_.ko_weight);
  require(Language::kEn, spec_.en_weight);
}

const std::vector<tokenizer::TokenId>& MixStream::encoded_shard(LanguageState& state,
                                                                std::size_t index) {
  auto& slot = state.encoded[index];
  if (!slot) {
    const CorpusShard& shard = state.shards[index];
    const std::string text = read_file(shard.path);
    try {
      slot = tokenizer::encode(vocab_, text);
    } catch (const EncodingError& e) {
      throw EncodingError(shard.path.string() + ": " + e.what());
    }
    slot->push_back(eos_);
  }
  return *slot;
}

void MixStream::refill(LanguageState& state, Language lang) {
  // Drop consumed tokens, then append shards until a block fits.
  state.buffer.erase(state.buffer.begin(),
                     state.buffer.begin() + static_cast<std::ptrdiff_t>(state.buffer_pos));
  state.buffer_pos = 0;
  std::size_t added_this_cycle = 0;
  std::size_t visited = 0;
  while (state.buffer.size() < spec_.block_size) {
    const auto& ids = encoded_shard(state, state.shard_cursor);
    state.buffer.insert(state.buffer.end(), ids.begin(), ids.end());
    added_this_cycle += ids.size();
    state.shard_cursor = (state.shard_cursor + 1) % state.shards.size();
    if (++visited == state.shards.size()) {
      if (added_this_cycle == 0) {
        throw ValidationError("shards for " + std::string(to_string(lang)) + " hold no tokens");
      }
      visited = 0;
      added_this_cycle = 0;
    }
  }
}

TokenBlock MixStream::next() {
  const double p_ko = spec_.ko_probability();
  const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  const Language lang = u < p_ko ? Language::kKo : Language::kEn;
  LanguageState& state = states_[lang];
  if (state.buffer.size() - state.buffer_pos < spec_.block_size) {
    refill(state, lang);
  }
  TokenBlock block;
  block.language = lang;
  const auto first = state.buffer.begin() + static_cast<std::ptrdiff_t>(state.buffer_pos);
  block.ids.assign(first, first + static_cast<std::ptrdiff_t>(spec_.block_size));
  state.buffer_pos += spec_.block_size;
  tokens_emitted_ += spec_.block_size;
  return block;
}

std::size_t MixStream::blocks_per_epoch() {
  std::size_t blocks = 0;
  for (auto& [lang, state] : states_) {
    const double weight = lang == Language::kKo ? spec_.ko_weight : spec_.en_weight;
    if (weight <= 0.0) continue;
    std::size_t tokens = 0;
    for (std::size_t i = 0; i < state.shards.size(); ++i) {
      tokens += encoded_shard(state, i).size();
    }
    blocks += tokens / spec_.block_size;
  }
  return blocks;
}

}  // namespace langadapt::data
