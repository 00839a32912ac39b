#include "langadapt/train/recipe.hpp"

#include <algorithm>
#include <toml.hpp>

#include "langadapt/data/instructions.hpp"
#include "langadapt/model/transformer.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::train {

namespace fs = std::filesystem;

namespace {

template <typename T>
void read_into(const toml::table& t, std::string_view key, T& out, const std::string& where) {
  const toml::node* node = t.get(key);
  if (node == nullptr) return;
  if constexpr (std::is_same_v<T, bool>) {
    const auto v = node->value<bool>();
    if (!v) throw ValidationError(where + "." + std::string(key) + " must be a boolean");
    out = *v;
  } else if constexpr (std::is_floating_point_v<T>) {
    const auto v = node->value<double>();
    if (!v) throw ValidationError(where + "." + std::string(key) + " must be a number");
    out = static_cast<T>(*v);
  } else if constexpr (std::is_integral_v<T>) {
    const auto v = node->value<std::int64_t>();
    if (!v || *v < 0) {
      throw ValidationError(where + "." + std::string(key) + " must be a non-negative integer");
    }
    out = static_cast<T>(*v);
  } else {
    const auto v = node->value<std::string>();
    if (!v) throw ValidationError(where + "." + std::string(key) + " must be a string");
    out = *v;
  }
}

const toml::table* section(const toml::table& root, std::string_view name) {
  const toml::node* node = root.get(name);
  if (node == nullptr) return nullptr;
  if (!node->is_table()) throw ValidationError("[" + std::string(name) + "] must be a table");
  return node->as_table();
}

void read_train(const toml::table* t, TrainConfig& cfg, const std::string& where) {
  if (t == nullptr) return;
  read_into(*t, "batch_size", cfg.batch_size, where);
  read_into(*t, "lr", cfg.lr, where);
  read_into(*t, "steps", cfg.steps, where);
  read_into(*t, "epochs", cfg.epochs, where);
  read_into(*t, "grad_clip", cfg.grad_clip, where);
  read_into(*t, "momentum", cfg.momentum, where);
  read_into(*t, "optimizer", cfg.optimizer, where);
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  const fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

void require_file(const fs::path& p, std::string_view what) {
  if (p.empty()) throw ValidationError(std::string(what) + " path is not set");
  if (!fs::exists(p)) throw ValidationError(std::string(what) + " " + p.string() + " does not exist");
}

bool has_training_stage(const Checkpoint& ckpt) {
  return ckpt.has_stage(Stage::kPretrain) || ckpt.has_stage(Stage::kSft);
}

void ensure_adapters(Checkpoint& ckpt) {
  if (ckpt.model.adapters.empty()) ckpt.model = model::attach_lora(std::move(ckpt.model));
}

}  // namespace

void RecipeConfig::apply_seed(std::uint64_t s) {
  seed = s;
  model.seed = s;
  mix.seed = s + 1;
  pretrain.seed = s + 2;
  sft.seed = s + 3;
}

void RecipeConfig::validate() const {
  if (stages.empty()) throw ValidationError("recipe has no stages");
  for (std::size_t i = 1; i < stages.size(); ++i) {
    if (static_cast<int>(stages[i]) <= static_cast<int>(stages[i - 1])) {
      throw ValidationError("stages must be a subsequence of expand, pretrain, sft");
    }
  }
  const auto has = [&](Stage s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
  if (has(Stage::kSft) && !has(Stage::kPretrain) && !allow_skip && paths.init_checkpoint.empty()) {
    throw ValidationError("sft without a pretrain stage requires allow_skip");
  }
  if (paths.init_checkpoint.empty()) {
    require_file(paths.base_vocab, "base_vocab");
  } else {
    require_file(paths.init_checkpoint, "init_checkpoint");
  }
  if (has(Stage::kExpand)) require_file(paths.ext_vocab, "ext_vocab");
  if (has(Stage::kPretrain)) {
    require_file(paths.corpus, "corpus");
    mix.validate();
    pretrain.validate();
    if (mix.block_size > model.max_seq) {
      throw ValidationError("mix.block_size exceeds model.max_seq");
    }
  }
  if (has(Stage::kSft)) {
    require_file(paths.instructions, "instructions");
    require_file(paths.prompt_template, "template");
    sft.validate();
  }
}

RecipeConfig parse_recipe_config(std::string_view toml_text, const fs::path& base_dir,
                                 const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw ParseError(source, e.source().begin.line, std::string(e.description()));
  }
  RecipeConfig cfg;
  std::uint64_t seed = 0;
  read_into(root, "seed", seed, "root");
  cfg.apply_seed(seed);
  read_into(root, "allow_skip", cfg.allow_skip, "root");
  if (const toml::node* node = root.get("stages")) {
    const toml::array* arr = node->as_array();
    if (arr == nullptr) throw ValidationError("stages must be an array of strings");
    cfg.stages.clear();
    for (const auto& item : *arr) {
      const auto name = item.value<std::string>();
      const auto stage = name ? parse_stage(*name) : std::nullopt;
      if (!stage) throw ValidationError("unknown stage in stages");
      cfg.stages.push_back(*stage);
    }
  }
  if (const toml::table* m = section(root, "model")) {
    read_into(*m, "n_layers", cfg.model.n_layers, "model");
    read_into(*m, "d_model", cfg.model.d_model, "model");
    read_into(*m, "n_heads", cfg.model.n_heads, "model");
    read_into(*m, "max_seq", cfg.model.max_seq, "model");
    read_into(*m, "lora_rank", cfg.model.lora_rank, "model");
    read_into(*m, "lora_alpha", cfg.model.lora_alpha, "model");
    read_into(*m, "init_std", cfg.model.init_std, "model");
  }
  if (const toml::table* m = section(root, "mix")) {
    read_into(*m, "ko_weight", cfg.mix.ko_weight, "mix");
    read_into(*m, "en_weight", cfg.mix.en_weight, "mix");
    read_into(*m, "block_size", cfg.mix.block_size, "mix");
  }
  read_train(section(root, "pretrain"), cfg.pretrain, "pretrain");
  cfg.pretrain.stage = Stage::kPretrain;
  read_train(section(root, "sft"), cfg.sft, "sft");
  cfg.sft.stage = Stage::kSft;
  if (const toml::table* s = section(root, "sft")) {
    if (const toml::node* node = s->get("languages")) {
      const toml::array* arr = node->as_array();
      if (arr == nullptr) throw ValidationError("sft.languages must be an array");
      for (const auto& item : *arr) {
        const auto name = item.value<std::string>();
        const auto lang = name ? data::parse_language(*name) : std::nullopt;
        if (!lang) throw ValidationError("sft.languages holds an unknown language");
        cfg.sft_languages.push_back(*lang);
      }
    }
  }
  if (const toml::table* p = section(root, "paths")) {
    const auto path_of = [&](std::string_view key) {
      std::string value;
      read_into(*p, key, value, "paths");
      return resolve(base_dir, value);
    };
    cfg.paths.base_vocab = path_of("base_vocab");
    cfg.paths.ext_vocab = path_of("ext_vocab");
    cfg.paths.corpus = path_of("corpus");
    cfg.paths.instructions = path_of("instructions");
    cfg.paths.prompt_template = path_of("template");
    cfg.paths.output = path_of("output");
    cfg.paths.metrics = path_of("metrics");
    cfg.paths.init_checkpoint = path_of("init_checkpoint");
  }
  return cfg;
}

RecipeConfig load_recipe_config(const fs::path& path) {
  return parse_recipe_config(read_file(path), path.parent_path(), path.string());
}

Checkpoint make_base_checkpoint(const tokenizer::Vocabulary& vocab, model::ModelConfig config) {
  config.vocab_size = vocab.size();
  return Checkpoint{model::init_model<float>(config), vocab, {}};
}

tokenizer::MergeReport run_expand_stage(Checkpoint& ckpt, const tokenizer::Vocabulary& extension,
                                        std::uint64_t seed) {
  if (ckpt.has_stage(Stage::kExpand)) {
    throw ValidationError("vocabulary already expanded");
  }
  if (has_training_stage(ckpt)) {
    throw ValidationError("expand must precede pretrain and sft");
  }
  auto [merged, report] = tokenizer::merge_vocab(ckpt.vocab, extension);
  if (report.added == 0) {
    throw ValidationError("extension vocabulary adds no entries");
  }
  ckpt.model = model::extend_embeddings(std::move(ckpt.model), merged.size(), seed);
  ckpt.vocab = std::move(merged);
  ckpt.stages.push_back(Stage::kExpand);
  return report;
}

TrainReport run_pretrain_stage(Checkpoint& ckpt, const fs::path& corpus_root,
                               const data::MixSpec& mix, const TrainConfig& cfg,
                               MetricsLog* metrics) {
  if (ckpt.has_stage(Stage::kSft)) {
    throw ValidationError("pretrain must precede sft");
  }
  if (mix.block_size > ckpt.model.config.max_seq) {
    throw ValidationError("block_size exceeds the model context");
  }
  const data::IngestResult corpus = data::ingest_corpus(corpus_root);
  data::MixStream stream(corpus.shards, ckpt.vocab, mix);
  ensure_adapters(ckpt);
  TrainConfig stage_cfg = cfg;
  stage_cfg.stage = Stage::kPretrain;
  TrainReport report = train_clm(ckpt.model, stream, stage_cfg, metrics);
  ckpt.stages.push_back(Stage::kPretrain);
  return report;
}

SftStageReport run_sft_stage(Checkpoint& ckpt, const fs::path& instructions,
                             const fs::path& prompt_template, const TrainConfig& cfg,
                             bool allow_skip, const std::vector<data::Language>& languages,
                             MetricsLog* metrics) {
  if (ckpt.has_stage(Stage::kSft)) {
    throw ValidationError("checkpoint has already been instruction tuned");
  }
  if (!ckpt.has_stage(Stage::kPretrain) && !allow_skip) {
    throw ValidationError("checkpoint lacks the pretrain stage; pass allow_skip to tune anyway");
  }
  const data::InstructionSet set = data::load_instructions(instructions);
  const data::PromptTemplate tmpl = data::load_template(prompt_template);
  std::vector<data::InstructionExample> kept;
  for (const auto& ex : set.examples) {
    if (languages.empty() ||
        std::find(languages.begin(), languages.end(), ex.lang) != languages.end()) {
      kept.push_back(ex);
    }
  }
  data::RenderSummary rendered =
      data::render_all(ckpt.vocab, kept, tmpl, ckpt.model.config.max_seq);
  if (rendered.rendered.empty()) {
    throw ValidationError("no instruction examples fit the model context");
  }
  ensure_adapters(ckpt);
  TrainConfig stage_cfg = cfg;
  stage_cfg.stage = Stage::kSft;
  SftStageReport report;
  report.train = train_sft(ckpt.model, rendered.rendered, stage_cfg, metrics);
  report.examples_used = rendered.rendered.size();
  report.skipped_overlong = rendered.skipped_overlong;
  ckpt.stages.push_back(Stage::kSft);
  return report;
}

RecipeResult run_recipe(const RecipeConfig& cfg) {
  cfg.validate();
  Checkpoint ckpt = cfg.paths.init_checkpoint.empty()
                        ? make_base_checkpoint(tokenizer::load_vocab(cfg.paths.base_vocab), cfg.model)
                        : load_checkpoint(cfg.paths.init_checkpoint);
  std::optional<MetricsLog> metrics;
  if (!cfg.paths.metrics.empty()) metrics.emplace(cfg.paths.metrics);
  MetricsLog* log = metrics ? &*metrics : nullptr;

  std::optional<tokenizer::MergeReport> merge;
  std::optional<TrainReport> pretrain;
  std::optional<SftStageReport> sft;
  for (const Stage stage : cfg.stages) {
    switch (stage) {
      case Stage::kExpand:
        merge = run_expand_stage(ckpt, tokenizer::load_vocab(cfg.paths.ext_vocab), cfg.seed + 4);
        break;
      case Stage::kPretrain:
        pretrain = run_pretrain_stage(ckpt, cfg.paths.corpus, cfg.mix, cfg.pretrain, log);
        break;
      case Stage::kSft:
        sft = run_sft_stage(ckpt, cfg.paths.instructions, cfg.paths.prompt_template, cfg.sft,
                            cfg.allow_skip, cfg.sft_languages, log);
        break;
    }
  }
  if (!cfg.paths.output.empty()) save_checkpoint(ckpt, cfg.paths.output);
  return RecipeResult{std::move(ckpt), merge, std::move(pretrain), std::move(sft)};
}

}  // namespace langadapt::train
