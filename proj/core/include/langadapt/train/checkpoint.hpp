#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "langadapt/model/parameters.hpp"
#include "langadapt/tokenizer/vocab.hpp"

namespace langadapt::train {

enum class Stage { kExpand, kPretrain, kSft };

std::string_view to_string(Stage stage);
std::optional<Stage> parse_stage(std::string_view s);

struct Checkpoint {
  model::Model<float> model;
  tokenizer::Vocabulary vocab;
  // Stages applied so far, in order.
  std::vector<Stage> stages;

  bool has_stage(Stage stage) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Layout: "BLSM", u32 version, u32 header length, JSON header, tensor
// payload of little-endian f32, then a u64 FNV-1a hash of every preceding
// byte. The FreezeMask is not stored; load rebuilds it from the adapter
// list and old_vocab_size.
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source = "<checkpoint>");

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Verifies framing and checksum and returns the pretty-printed JSON header.
std::string inspect_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace langadapt::train
