#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "langadapt/model/transformer.hpp"
#include "langadapt/numerics/graph.hpp"
#include "langadapt/numerics/ops.hpp"
#include "langadapt/tokenizer/tokenizer.hpp"
#include "langadapt/train/trainer.hpp"
#include "langadapt/util/files.hpp"

namespace {

using namespace langadapt;

const tokenizer::Vocabulary& merged() {
  static const tokenizer::Vocabulary v = [] {
    const std::string dir = LANGADAPT_FIXTURE_DIR;
    return tokenizer::merge_vocab(tokenizer::load_vocab(dir + "/llama2_subset.vocab"),
                                  tokenizer::load_vocab(dir + "/ko_subset.vocab"))
        .first;
  }();
  return v;
}

std::string korean_text(std::size_t repeats) {
  std::string s;
  for (std::size_t i = 0; i < repeats; ++i) s += "햄버거를 먹는 공룡이 the model reads 😀 ";
  return s;
}

void BM_Encode(benchmark::State& state) {
  const auto& v = merged();
  const std::string text = korean_text(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto ids = tokenizer::encode(v, text);
    benchmark::DoNotOptimize(ids.data());
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Encode)->Range(8, 512);

void BM_Decode(benchmark::State& state) {
  const auto& v = merged();
  const auto ids = tokenizer::encode(v, korean_text(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) {
    auto text = tokenizer::decode(v, ids);
    benchmark::DoNotOptimize(text.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * ids.size()));
}
BENCHMARK(BM_Decode)->Range(8, 512);

void BM_MatmulForwardBackward(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<float> d(0.0f, 1.0f);
  numerics::Tensor<float> a({n, n}), b({n, n});
  for (auto& x : a.data()) x = d(rng);
  for (auto& x : b.data()) x = d(rng);
  for (auto _ : state) {
    numerics::Graph<float> g;
    const auto va = g.leaf(a);
    const auto vb = g.leaf(b);
    const auto out = numerics::sum(g, numerics::matmul(g, va, vb));
    g.backward(out);
    benchmark::DoNotOptimize(g.grad(va).data().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_MatmulForwardBackward)->RangeMultiplier(2)->Range(16, 256)->Complexity();

void BM_TrainStep(benchmark::State& state) {
  model::ModelConfig c;
  c.n_layers = 2;
  c.d_model = static_cast<std::size_t>(state.range(0));
  c.n_heads = 4;
  c.vocab_size = merged().size();
  c.max_seq = 64;
  auto m = model::init_model<float>(c);
  for (const auto& [name, t] : m.named_tensors()) m.mask.set_trainable(name);
  std::mt19937_64 rng(2);
  std::vector<std::vector<std::uint32_t>> blocks(8, std::vector<std::uint32_t>(64));
  for (auto& blk : blocks) {
    for (auto& id : blk) id = static_cast<std::uint32_t>(rng() % c.vocab_size);
  }
  std::vector<train::Sequence> batch;
  for (const auto& blk : blocks) batch.push_back({blk, {}});
  for (auto _ : state) {
    auto lg = train::loss_and_grads(m, batch);
    benchmark::DoNotOptimize(lg.loss);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 8 * 64));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
