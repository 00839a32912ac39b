#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "langadapt/train/recipe.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::cli {

namespace {

struct RecipeArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool allow_skip = false;
  std::vector<std::string> stages;
  std::string output;
  std::string metrics;
};

struct TrainArgs {
  std::string checkpoint;
  std::string base_vocab;
  std::string out;
  std::string metrics;
  std::uint64_t seed = 0;
  train::TrainConfig train;
  model::ModelConfig model;
};

struct PretrainArgs : TrainArgs {
  std::string corpus;
  data::MixSpec mix;
};

struct SftArgs : TrainArgs {
  std::string instructions;
  std::string prompt_template;
  bool allow_skip = false;
  std::vector<std::string> languages;
};

void print_report(const char* stage, const train::TrainReport& r) {
  if (r.losses.empty()) return;
  std::printf("%s: %zu steps, loss %.4f -> %.4f, %llu tokens\n", stage, r.steps(), r.losses.front(),
              r.losses.back(), static_cast<unsigned long long>(r.tokens_seen));
}

void print_stages(const train::Checkpoint& ckpt) {
  std::string s;
  for (const auto st : ckpt.stages) {
    if (!s.empty()) s += ", ";
    s += train::to_string(st);
  }
  std::printf("stages: [%s]\n", s.c_str());
}

void run_recipe_cmd(const RecipeArgs& a) {
  train::RecipeConfig cfg = train::load_recipe_config(a.config);
  if (a.seed) cfg.apply_seed(*a.seed);
  if (a.allow_skip) cfg.allow_skip = true;
  if (!a.stages.empty()) {
    cfg.stages.clear();
    for (const auto& name : a.stages) {
      const auto st = train::parse_stage(name);
      if (!st) throw ValidationError("unknown stage '" + name + "'");
      cfg.stages.push_back(*st);
    }
  }
  if (!a.output.empty()) cfg.paths.output = a.output;
  if (!a.metrics.empty()) cfg.paths.metrics = a.metrics;
  if (cfg.paths.output.empty()) throw ValidationError("no output checkpoint path (--output)");
  const auto result = train::run_recipe(cfg);
  if (result.merge) {
    std::printf("expand: base %zu + extension %zu - shared %zu = %zu (added %zu)\n",
                result.merge->base_size, result.merge->extension_size,
                result.merge->duplicates_skipped, result.merge->merged_size, result.merge->added);
  }
  if (result.pretrain) print_report("pretrain", *result.pretrain);
  if (result.sft) {
    print_report("sft", result.sft->train);
    if (result.sft->skipped_overlong) {
      std::printf("sft: skipped %zu overlong examples\n", result.sft->skipped_overlong);
    }
  }
  print_stages(result.checkpoint);
  std::printf("wrote %s\n", cfg.paths.output.string().c_str());
}

train::Checkpoint starting_point(const TrainArgs& a) {
  if (!a.checkpoint.empty()) return train::load_checkpoint(a.checkpoint);
  model::ModelConfig config = a.model;
  config.seed = a.seed;
  return train::make_base_checkpoint(tokenizer::load_vocab(a.base_vocab), config);
}

void run_pretrain(PretrainArgs a) {
  a.mix.seed = a.seed + 1;
  a.train.seed = a.seed + 2;
  a.mix.validate();
  a.train.validate();
  train::Checkpoint ckpt = starting_point(a);
  std::optional<train::MetricsLog> log;
  if (!a.metrics.empty()) log.emplace(a.metrics);
  const auto report =
      train::run_pretrain_stage(ckpt, a.corpus, a.mix, a.train, log ? &*log : nullptr);
  train::save_checkpoint(ckpt, a.out);
  print_report("pretrain", report);
  print_stages(ckpt);
}

void run_sft(SftArgs a) {
  a.train.seed = a.seed + 3;
  a.train.validate();
  std::vector<data::Language> langs;
  for (const auto& l : a.languages) {
    const auto lang = data::parse_language(l);
    if (!lang) throw ValidationError("unknown language '" + l + "'");
    langs.push_back(*lang);
  }
  train::Checkpoint ckpt = starting_point(a);
  std::optional<train::MetricsLog> log;
  if (!a.metrics.empty()) log.emplace(a.metrics);
  const auto report = train::run_sft_stage(ckpt, a.instructions, a.prompt_template, a.train,
                                           a.allow_skip, langs, log ? &*log : nullptr);
  train::save_checkpoint(ckpt, a.out);
  print_report("sft", report.train);
  print_stages(ckpt);
}

void add_train_options(CLI::App* cmd, TrainArgs& a) {
  auto* ck = cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint to continue from")
                 ->check(CLI::ExistingFile);
  auto* bv = cmd->add_option("--base-vocab", a.base_vocab,
                             "Start from a fresh model over this vocabulary instead")
                 ->check(CLI::ExistingFile);
  ck->excludes(bv);
  cmd->add_option("--out", a.out, "Output checkpoint")->required();
  cmd->add_option("--metrics", a.metrics, "Metrics CSV output");
  cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
  cmd->add_option("--steps", a.train.steps, "Optimizer steps (0: derive from --epochs)")->capture_default_str();
  cmd->add_option("--epochs", a.train.epochs, "Epochs when --steps is 0")->capture_default_str();
  cmd->add_option("--batch-size", a.train.batch_size, "Sequences per step")->capture_default_str();
  cmd->add_option("--lr", a.train.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--grad-clip", a.train.grad_clip, "Global gradient-norm clip (0 disables)")->capture_default_str();
  cmd->add_option("--momentum", a.train.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--optimizer", a.train.optimizer, "sgd or adam")
      ->check(CLI::IsMember({"sgd", "adam"}))
      ->capture_default_str();
  cmd->add_option("--layers", a.model.n_layers, "Layers (fresh model)")->capture_default_str();
  cmd->add_option("--d-model", a.model.d_model, "Width (fresh model)")->capture_default_str();
  cmd->add_option("--heads", a.model.n_heads, "Attention heads (fresh model)")->capture_default_str();
  cmd->add_option("--max-seq", a.model.max_seq, "Context length (fresh model)")->capture_default_str();
  cmd->add_option("--lora-rank", a.model.lora_rank, "Adapter rank")->capture_default_str();
  cmd->add_option("--lora-alpha", a.model.lora_alpha, "Adapter alpha")->capture_default_str();
}

void require_start(const TrainArgs& a) {
  if (a.checkpoint.empty() && a.base_vocab.empty()) {
    throw CLI::RequiredError("--checkpoint or --base-vocab");
  }
}

}  // namespace

void add_train_commands(CLI::App& app) {
  auto* recipe = app.add_subcommand("recipe", "Multi-stage training recipes");
  recipe->require_subcommand(1);
  auto recipe_args = std::make_shared<RecipeArgs>();
  auto* run = recipe->add_subcommand("run", "Run expand / pretrain / sft from a TOML config");
  run->add_option("--config", recipe_args->config, "Run config (TOML)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", recipe_args->seed, "Override the config seed");
  run->add_flag("--allow-skip", recipe_args->allow_skip, "Permit SFT without a pretrain stage");
  run->add_option("--stages", recipe_args->stages, "Override stages (expand, pretrain, sft)");
  run->add_option("--output", recipe_args->output, "Override the output checkpoint path");
  run->add_option("--metrics", recipe_args->metrics, "Override the metrics CSV path");
  run->callback([recipe_args] { run_recipe_cmd(*recipe_args); });

  auto pre_args = std::make_shared<PretrainArgs>();
  auto* pretrain = app.add_subcommand("pretrain", "Causal-LM pretraining on a ko/en corpus mix");
  add_train_options(pretrain, *pre_args);
  pretrain->add_option("--corpus", pre_args->corpus, "Corpus root with ko/ and en/ subdirectories")
      ->required()
      ->check(CLI::ExistingDirectory);
  pretrain->add_option("--ko-weight", pre_args->mix.ko_weight, "Korean block weight")->capture_default_str();
  pretrain->add_option("--en-weight", pre_args->mix.en_weight, "English block weight")->capture_default_str();
  pretrain->add_option("--block-size", pre_args->mix.block_size, "Tokens per block")->capture_default_str();
  pretrain->callback([pre_args] {
    require_start(*pre_args);
    run_pretrain(*pre_args);
  });

  auto sft_args = std::make_shared<SftArgs>();
  sft_args->train.stage = train::Stage::kSft;
  auto* sft = app.add_subcommand("sft", "Output-masked instruction tuning");
  add_train_options(sft, *sft_args);
  sft->add_option("--instructions", sft_args->instructions, "Instruction JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  sft->add_option("--template", sft_args->prompt_template, "Prompt template file")
      ->required()
      ->check(CLI::ExistingFile);
  sft->add_flag("--allow-skip", sft_args->allow_skip, "Permit tuning a checkpoint that was never pretrained");
  sft->add_option("--languages", sft_args->languages, "Keep only these record languages (ko, en)");
  sft->callback([sft_args] {
    require_start(*sft_args);
    run_sft(*sft_args);
  });
}

}  // namespace langadapt::cli
