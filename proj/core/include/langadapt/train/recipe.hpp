#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "langadapt/data/corpus.hpp"
#include "langadapt/model/config.hpp"
#include "langadapt/train/checkpoint.hpp"
#include "langadapt/train/trainer.hpp"

namespace langadapt::train {

struct RecipePaths {
  std::filesystem::path base_vocab;
  std::filesystem::path ext_vocab;
  std::filesystem::path corpus;
  std::filesystem::path instructions;
  std::filesystem::path prompt_template;
  std::filesystem::path output;
  std::filesystem::path metrics;
  // Start from this checkpoint instead of a freshly initialised base model.
  std::filesystem::path init_checkpoint;
};

struct RecipeConfig {
  std::vector<Stage> stages{Stage::kExpand, Stage::kPretrain, Stage::kSft};
  bool allow_skip = false;
  std::uint64_t seed = 0;
  model::ModelConfig model;
  data::MixSpec mix;
  TrainConfig pretrain;
  TrainConfig sft;
  // Languages of instruction records kept for SFT; empty keeps all.
  std::vector<data::Language> sft_languages;
  RecipePaths paths;

  // Propagates seed into every seeded component.
  void apply_seed(std::uint64_t s);
  // Stage order, positivity and presence of the inputs each stage needs.
  void validate() const;
};

// Relative paths resolve against base_dir. Throws ParseError on TOML
// syntax errors and ValidationError on bad values.
RecipeConfig parse_recipe_config(std::string_view toml_text, const std::filesystem::path& base_dir,
                                 const std::string& source = "<toml>");
RecipeConfig load_recipe_config(const std::filesystem::path& path);

// Fresh base model sized to the vocabulary, history empty.
Checkpoint make_base_checkpoint(const tokenizer::Vocabulary& vocab, model::ModelConfig config);

// Each stage throws ValidationError on an order violation: expand after any
// training stage or twice, and SFT without pretraining unless allow_skip.
tokenizer::MergeReport run_expand_stage(Checkpoint& ckpt, const tokenizer::Vocabulary& extension,
                                        std::uint64_t seed);

TrainReport run_pretrain_stage(Checkpoint& ckpt, const std::filesystem::path& corpus_root,
                               const data::MixSpec& mix, const TrainConfig& cfg,
                               MetricsLog* metrics = nullptr);

struct SftStageReport {
  TrainReport train;
  std::size_t examples_used = 0;
  std::size_t skipped_overlong = 0;
};

SftStageReport run_sft_stage(Checkpoint& ckpt, const std::filesystem::path& instructions,
                             const std::filesystem::path& prompt_template, const TrainConfig& cfg,
                             bool allow_skip, const std::vector<data::Language>& languages = {},
                             MetricsLog* metrics = nullptr);

struct RecipeResult {
  Checkpoint checkpoint;
  std::optional<tokenizer::MergeReport> merge;
  std::optional<TrainReport> pretrain;
  std::optional<SftStageReport> sft;
};

// Runs the configured stages in order and, when paths.output is set,
// writes the final checkpoint there.
RecipeResult run_recipe(const RecipeConfig& cfg);

}  // namespace langadapt::train
