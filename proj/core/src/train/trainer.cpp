#include "langadapt/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "langadapt/model/transformer.hpp"
#include "langadapt/numerics/ops.hpp"
#include "langadapt/train/losses.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::train {

namespace {

std::size_t scored_in(const Sequence& s) {
  return s.mask.empty() ? s.ids.size() - 1 : scored_positions(s.mask);
}

class StepRunner {
 public:
  StepRunner(model::Model<float>& model, const TrainConfig& cfg, MetricsLog* metrics)
      : model_(model), cfg_(cfg), metrics_(metrics),
        optimizer_(make_optimizer(cfg.optimizer, cfg.momentum)) {}

  void run(std::span<const Sequence> batch) {
    const std::size_t step = report.losses.size() + 1;
    LossAndGrads lg;
    try {
      lg = loss_and_grads(model_, batch);
    } catch (const NumericError& e) {
      fail(step, e.what());
    }
    if (!std::isfinite(lg.loss)) fail(step, "loss is not finite");
    clip_global_norm(lg.grads, cfg_.grad_clip);
    optimizer_->step(model_, lg.grads, cfg_.lr);
    for (const Sequence& s : batch) report.tokens_seen += s.ids.size();
    report.losses.push_back(lg.loss);
    if (metrics_ != nullptr) {
      metrics_->append(step, cfg_.stage, lg.loss, cfg_.lr, report.tokens_seen);
    }
  }

  void finish() const {
    if (metrics_ != nullptr) metrics_->flush();
  }

  TrainReport report;

 private:
  [[noreturn]] void fail(std::size_t step, const std::string& why) const {
    finish();
    throw NumericError("training diverged at step " + std::to_string(step) + ": " + why);
  }

  model::Model<float>& model_;
  const TrainConfig& cfg_;
  MetricsLog* metrics_;
  std::unique_ptr<Optimizer> optimizer_;
};

}  // namespace

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("lr must be finite and >= 0");
  if (batch_size == 0) throw ValidationError("batch_size must be positive");
  if (steps == 0 && epochs == 0) throw ValidationError("either steps or epochs must be positive");
  if (grad_clip < 0.0) throw ValidationError("grad_clip must be >= 0");
  (void)make_optimizer(optimizer, momentum);
}

MetricsLog::MetricsLog(std::filesystem::path path) : path_(std::move(path)) {
  text_ = "step,stage,loss,lr,tokens_seen\n";
}

void MetricsLog::append(std::size_t step, Stage stage, double loss, double lr,
                        std::uint64_t tokens_seen) {
  char line[160];
  std::snprintf(line, sizeof(line), "%zu,%s,%.9g,%.9g,%llu\n", step,
                std::string(to_string(stage)).c_str(), loss, lr,
                static_cast<unsigned long long>(tokens_seen));
  text_ += line;
  ++rows_;
}

void MetricsLog::flush() const {
  if (!path_.empty()) write_file_atomic(path_, text_);
}

LossAndGrads loss_and_grads(const model::Model<float>& model, std::span<const Sequence> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  std::size_t total_scored = 0;
  for (const Sequence& s : batch) {
    if (s.ids.size() < 2) throw ValidationError("training sequence shorter than 2 tokens");
    total_scored += scored_in(s);
  }
  if (total_scored == 0) throw ValidationError("no scored positions");

  numerics::Graph<float> g;
  const model::Binding binding = model::bind(g, model);
  std::vector<numerics::Var> parts;
  for (const Sequence& s : batch) {
    const std::size_t scored = scored_in(s);
    if (scored == 0) continue;
    const numerics::Var logits = model::forward(g, model, binding, s.ids);
    const numerics::Var loss =
        s.mask.empty() ? clm_loss(g, logits, s.ids) : sft_loss(g, logits, s.ids, s.mask);
    parts.push_back(numerics::scale(
        g, loss, static_cast<float>(static_cast<double>(scored) / static_cast<double>(total_scored))));
  }
  numerics::Var total = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) total = numerics::add(g, total, parts[i]);
  g.backward(total);

  LossAndGrads out;
  out.loss = g.value(total)[0];
  out.scored = total_scored;
  for (const auto& [name, tensor] : model.named_tensors()) {
    if (!model.mask.any_trainable(name)) continue;
    out.grads.emplace(name, g.grad(binding.at(name)));
  }
  mask_gradients(model.mask, out.grads);
  return out;
}

TrainReport train_clm(model::Model<float>& model, data::MixStream& stream, const TrainConfig& cfg,
                      MetricsLog* metrics) {
  cfg.validate();
  std::size_t steps = cfg.steps;
  if (steps == 0) {
    const std::size_t blocks = stream.blocks_per_epoch();
    steps = cfg.epochs * ((blocks + cfg.batch_size - 1) / cfg.batch_size);
    if (steps == 0) throw ValidationError("corpus holds less than one block");
  }
  StepRunner runner(model, cfg, metrics);
  std::vector<data::TokenBlock> blocks(cfg.batch_size);
  std::vector<Sequence> batch(cfg.batch_size);
  for (std::size_t step = 0; step < steps; ++step) {
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      blocks[b] = stream.next();
      if (blocks[b].ids.size() > model.config.max_seq) {
        throw ValidationError("block_size " + std::to_string(blocks[b].ids.size()) +
                              " exceeds max_seq " + std::to_string(model.config.max_seq));
      }
      batch[b] = Sequence{blocks[b].ids, {}};
    }
    runner.run(batch);
  }
  runner.finish();
  return std::move(runner.report);
}

TrainReport train_sft(model::Model<float>& model, std::span<const data::RenderedExample> examples,
                      const TrainConfig& cfg, MetricsLog* metrics) {
  cfg.validate();
  if (examples.empty()) throw ValidationError("empty SFT dataset");
  const std::size_t per_epoch = (examples.size() + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t steps = cfg.steps != 0 ? cfg.steps : cfg.epochs * per_epoch;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(examples.size());
  std::size_t cursor = order.size();
  StepRunner runner(model, cfg, metrics);
  std::vector<Sequence> batch;
  for (std::size_t step = 0; step < steps; ++step) {
    batch.clear();
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const auto& ex = examples[order[cursor++]];
      batch.push_back(Sequence{ex.ids, ex.loss_mask});
    }
    runner.run(batch);
  }
  runner.finish();
  return std::move(runner.report);
}

}  // namespace langadapt::train
