#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>

#include "langadapt/model/transformer.hpp"
#include "langadapt/train/optimizer.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::train {
namespace {

model::Model<float> tiny_model() {
  model::ModelConfig c;
  c.n_layers = 1;
  c.d_model = 8;
  c.n_heads = 2;
  c.vocab_size = 264;
  c.max_seq = 8;
  c.lora_rank = 2;
  return model::init_model<float>(c);
}

numerics::Tensor<float> random_like(const numerics::Tensor<float>& t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  numerics::Tensor<float> out(t.shape());
  for (auto& x : out.data()) x = d(rng);
  return out;
}

TEST(Optimizer, MomentumSgdMatchesRecurrence) {
  auto m = tiny_model();
  const auto p0 = m.params.at("layers.0.wq");
  MomentumSgd opt(0.9);
  std::vector<float> v(p0.size(), 0.0f);
  std::vector<float> p(p0.data().begin(), p0.data().end());
  for (int step = 0; step < 3; ++step) {
    Gradients g;
    g.emplace("layers.0.wq", random_like(p0, step));
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = 0.9f * v[i] + g.at("layers.0.wq")[i];
      p[i] -= 0.05f * v[i];
    }
    opt.step(m, g, 0.05);
  }
  const auto& got = m.params.at("layers.0.wq");
  for (std::size_t i = 0; i < p.size(); ++i) ASSERT_EQ(got[i], p[i]) << i;
}

TEST(Optimizer, AdamMatchesBiasCorrectedUpdate) {
  auto m = tiny_model();
  const auto p0 = m.params.at("final_norm");
  Adam opt;
  std::vector<double> mm(p0.size()), vv(p0.size()), p(p0.data().begin(), p0.data().end());
  for (int t = 1; t <= 4; ++t) {
    Gradients g;
    g.emplace("final_norm", random_like(p0, 10 + t));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g.at("final_norm")[i];
      mm[i] = 0.9 * mm[i] + 0.1 * gi;
      vv[i] = 0.999 * vv[i] + 0.001 * gi * gi;
      const double mh = mm[i] / (1 - std::pow(0.9, t));
      const double vh = vv[i] / (1 - std::pow(0.999, t));
      p[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
    opt.step(m, g, 0.01);
  }
  for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(m.params.at("final_norm")[i], p[i], 1e-5);
}

TEST(Optimizer, FrozenRowsAreNeverWritten) {
  auto m = model::extend_embeddings(tiny_model(), 270, 3);
  const auto before = m.params.at("tok_embedding");
  for (const std::string name : {"sgd", "adam"}) {
    auto opt = make_optimizer(name, 0.9);
    Gradients g;
    g.emplace("tok_embedding", random_like(before, 1));
    opt->step(m, g, 0.1);
  }
  const auto& after = m.params.at("tok_embedding");
  for (std::size_t r = 0; r < 270; ++r) {
    for (std::size_t c = 0; c < 8; ++c) {
      if (r < 264) {
        ASSERT_EQ(std::bit_cast<std::uint32_t>(after.at(r, c)),
                  std::bit_cast<std::uint32_t>(before.at(r, c)));
      } else {
        ASSERT_NE(after.at(r, c), before.at(r, c));
      }
    }
  }
}

TEST(Optimizer, ClipGlobalNorm) {
  Gradients g;
  g.emplace("a", numerics::Tensor<float>({2}, {3.0f, 0.0f}));
  g.emplace("b", numerics::Tensor<float>({1}, {4.0f}));
  EXPECT_NEAR(clip_global_norm(g, 1.0), 5.0, 1e-6);
  EXPECT_NEAR(g.at("a")[0], 0.6f, 1e-6);
  EXPECT_NEAR(g.at("b")[0], 0.8f, 1e-6);
  EXPECT_NEAR(clip_global_norm(g, 10.0), 1.0, 1e-6);
  EXPECT_NEAR(g.at("b")[0], 0.8f, 1e-6);
}

TEST(Optimizer, MaskGradientsZeroesFrozenEntries) {
  const auto m = model::extend_embeddings(tiny_model(), 266, 3);
  Gradients g;
  g.emplace("tok_embedding", numerics::Tensor<float>::filled({266, 8}, 1.0f));
  g.emplace("layers.0.wq", numerics::Tensor<float>::filled({8, 8}, 1.0f));
  mask_gradients(m.mask, g);
  EXPECT_EQ(g.count("layers.0.wq"), 0u);
  const auto& t = g.at("tok_embedding");
  EXPECT_EQ(t.at(263, 0), 0.0f);
  EXPECT_EQ(t.at(264, 0), 1.0f);
}

TEST(Optimizer, Factory) {
  EXPECT_EQ(make_optimizer("sgd", 0.9)->name(), "sgd");
  EXPECT_EQ(make_optimizer("adam", 0.9)->name(), "adam");
  EXPECT_THROW(make_optimizer("lion", 0.9), ValidationError);
  EXPECT_THROW(MomentumSgd(1.0), ValidationError);
}

}  // namespace
}  // namespace langadapt::train
