#include "langadapt/model/transformer.hpp"

#include <cmath>
#include <random>

#include "langadapt/numerics/ops.hpp"
#include "langadapt/util/error.hpp"

namespace langadapt::model {

namespace ops = numerics;

namespace {

constexpr std::uint64_t kAdapterSeedSalt = 0x9E3779B97F4A7C15ull;

template <typename T>
Tensor<T> normal_tensor(numerics::Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

// Population standard deviation of every element.
template <typename T>
double empirical_std(const Tensor<T>& t) {
  if (t.size() == 0) return 0.0;
  double mean = 0.0;
  for (const T v : t.data()) mean += static_cast<double>(v);
  mean /= static_cast<double>(t.size());
  double var = 0.0;
  for (const T v : t.data()) {
    const double d = static_cast<double>(v) - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(t.size()));
}

template <typename T>
Tensor<T> append_rows(const Tensor<T>& base, std::size_t new_rows, std::mt19937_64& rng) {
  const std::size_t d = base.cols();
  std::vector<T> data = base.storage();
  const double stddev = empirical_std(base);
  std::normal_distribution<double> dist(0.0, stddev);
  data.reserve(data.size() + new_rows * d);
  for (std::size_t i = 0; i < new_rows * d; ++i) data.push_back(static_cast<T>(dist(rng)));
  return Tensor<T>({base.dim(0) + new_rows, d}, std::move(data));
}

void freeze_base(FreezeMask& mask, const std::vector<std::string>& order, std::size_t old_vocab,
                 std::size_t vocab) {
  for (const std::string& name : order) {
    mask.set_frozen(name);
  }
  if (old_vocab < vocab) {
    mask.set_rows_from(std::string(names::kTokenEmbedding), old_vocab);
    mask.set_rows_from(std::string(names::kOutput), old_vocab);
  }
}

template <typename T>
Var projection(Graph<T>& g, const Binding& b, Var x, const std::string& weight,
               const LoraAdapter<T>* adapter) {
  Var out = ops::matmul(g, x, b.at(weight));
  if (adapter != nullptr) {
    const Var down = ops::matmul(g, x, b.at(adapter->a_name()));
    const Var up = ops::matmul(g, down, b.at(adapter->b_name()));
    out = ops::add(g, out, ops::scale(g, up, static_cast<T>(adapter->scale())));
  }
  return out;
}

template <typename T>
const LoraAdapter<T>* find_adapter(const Model<T>& model, std::size_t layer, LoraTarget target) {
  for (const auto& a : model.adapters) {
    if (a.layer == layer && a.target == target) return &a;
  }
  return nullptr;
}

}  // namespace

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  const std::size_t f = c.ffn_dim();
  const std::size_t per_layer = 2 * d + 4 * d * d + 3 * d * f;
  return c.vocab_size * d + c.max_seq * d + c.n_layers * per_layer + d + c.vocab_size * d;
}

template <typename T>
Model<T> init_model(const ModelConfig& config) {
  config.validate();
  Model<T> model;
  model.config = config;
  model.old_vocab_size = config.vocab_size;
  std::mt19937_64 rng(config.seed);
  const std::size_t d = config.d_model;
  const std::size_t f = config.ffn_dim();
  const double s = config.init_std;
  auto& p = model.params;
  p.add(std::string(names::kTokenEmbedding), normal_tensor<T>({config.vocab_size, d}, s, rng));
  p.add(std::string(names::kPositionEmbedding), normal_tensor<T>({config.max_seq, d}, s, rng));
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    p.add(names::layer(l, "attn_norm"), Tensor<T>({d}));
    p.add(names::layer(l, "wq"), normal_tensor<T>({d, d}, s, rng));
    p.add(names::layer(l, "wk"), normal_tensor<T>({d, d}, s, rng));
    p.add(names::layer(l, "wv"), normal_tensor<T>({d, d}, s, rng));
    p.add(names::layer(l, "wo"), normal_tensor<T>({d, d}, s, rng));
    p.add(names::layer(l, "mlp_norm"), Tensor<T>({d}));
    p.add(names::layer(l, "w_gate"), normal_tensor<T>({d, f}, s, rng));
    p.add(names::layer(l, "w_up"), normal_tensor<T>({d, f}, s, rng));
    p.add(names::layer(l, "w_down"), normal_tensor<T>({f, d}, s, rng));
  }
  p.add(std::string(names::kFinalNorm), Tensor<T>({d}));
  p.add(std::string(names::kOutput), normal_tensor<T>({config.vocab_size, d}, s, rng));
  for (const std::string& name : p.order) {
    model.mask.set_trainable(name);
  }
  return model;
}

template <typename T>
Model<T> extend_embeddings(Model<T> model, std::size_t new_vocab, std::uint64_t seed) {
  const std::size_t old_vocab = model.config.vocab_size;
  if (new_vocab <= old_vocab) {
    throw ValidationError("extend_embeddings: new vocabulary " + std::to_string(new_vocab) +
                          " must exceed current " + std::to_string(old_vocab));
  }
  std::mt19937_64 rng(seed);
  const std::size_t added = new_vocab - old_vocab;
  auto& emb = model.params.at(names::kTokenEmbedding);
  emb = append_rows(emb, added, rng);
  auto& out = model.params.at(names::kOutput);
  out = append_rows(out, added, rng);
  model.config.vocab_size = new_vocab;
  model.old_vocab_size = old_vocab;
  freeze_base(model.mask, model.params.order, old_vocab, new_vocab);
  for (const auto& adapter : model.adapters) {
    model.mask.set_trainable(adapter.a_name());
    model.mask.set_trainable(adapter.b_name());
  }
  return model;
}

template <typename T>
Model<T> attach_lora(Model<T> model) {
  if (!model.adapters.empty()) {
    throw ValidationError("attach_lora: adapters already attached");
  }
  const ModelConfig& c = model.config;
  c.validate();
  std::mt19937_64 rng(c.seed ^ kAdapterSeedSalt);
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    for (const LoraTarget target : {LoraTarget::kQuery, LoraTarget::kKey, LoraTarget::kValue}) {
      LoraAdapter<T> adapter;
      adapter.target = target;
      adapter.layer = l;
      adapter.a = normal_tensor<T>({c.d_model, c.lora_rank}, c.init_std, rng);
      adapter.b = Tensor<T>({c.lora_rank, c.d_model});
      adapter.alpha = c.lora_alpha;
      model.adapters.push_back(std::move(adapter));
    }
  }
  freeze_base(model.mask, model.params.order, model.old_vocab_size, c.vocab_size);
  for (const auto& adapter : model.adapters) {
    model.mask.set_trainable(adapter.a_name());
    model.mask.set_trainable(adapter.b_name());
  }
  return model;
}

template <typename T>
FreezeMask standard_freeze_mask(const Model<T>& model) {
  FreezeMask mask;
  if (model.adapters.empty() && model.old_vocab_size >= model.config.vocab_size) {
    for (const std::string& name : model.params.order) mask.set_trainable(name);
    return mask;
  }
  freeze_base(mask, model.params.order, model.old_vocab_size, model.config.vocab_size);
  for (const auto& adapter : model.adapters) {
    mask.set_trainable(adapter.a_name());
    mask.set_trainable(adapter.b_name());
  }
  return mask;
}

template <typename T>
double trainable_fraction(const Model<T>& model) {
  std::size_t trainable = 0;
  std::size_t total = 0;
  for (const auto& [name, tensor] : model.named_tensors()) {
    trainable += model.mask.trainable_scalars(name, tensor->shape());
    total += tensor->size();
  }
  return total == 0 ? 0.0 : static_cast<double>(trainable) / static_cast<double>(total);
}

Var Binding::at(std::string_view name) const {
  const auto it = vars.find(name);
  if (it == vars.end()) {
    throw ValidationError("binding has no tensor " + std::string(name));
  }
  return it->second;
}

template <typename T>
Binding bind(Graph<T>& g, const Model<T>& model) {
  Binding b;
  for (const auto& [name, tensor] : model.named_tensors()) {
    b.vars.emplace(name, g.leaf(*tensor));
  }
  return b;
}

template <typename T>
Var forward(Graph<T>& g, const Model<T>& model, const Binding& b,
            std::span<const std::uint32_t> ids) {
  const ModelConfig& c = model.config;
  if (ids.empty()) {
    throw ValidationError("forward: empty input");
  }
  if (ids.size() > c.max_seq) {
    throw ValidationError("forward: sequence of " + std::to_string(ids.size()) +
                          " exceeds max_seq " + std::to_string(c.max_seq));
  }
  for (const auto id : ids) {
    if (id >= c.vocab_size) {
      throw ValidationError("forward: token id " + std::to_string(id) + " out of range");
    }
  }
  const std::size_t n = ids.size();
  std::vector<std::uint32_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<std::uint32_t>(i);

  Var x = ops::add(g, ops::embedding(g, b.at(names::kTokenEmbedding), ids),
                   ops::embedding(g, b.at(names::kPositionEmbedding),
                                  std::span<const std::uint32_t>(positions)));
  const std::size_t dh = c.head_dim();
  const T inv_sqrt_dh = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    const Var h = ops::rmsnorm(g, x, ops::add_scalar(g, b.at(names::layer(l, "attn_norm")), T{1}));
    const Var q = projection(g, b, h, names::layer(l, "wq"),
                             find_adapter(model, l, LoraTarget::kQuery));
    const Var k = projection(g, b, h, names::layer(l, "wk"),
                             find_adapter(model, l, LoraTarget::kKey));
    const Var v = projection(g, b, h, names::layer(l, "wv"),
                             find_adapter(model, l, LoraTarget::kValue));
    std::vector<Var> heads;
    heads.reserve(c.n_heads);
    for (std::size_t head = 0; head < c.n_heads; ++head) {
      const Var qh = ops::slice_cols(g, q, head * dh, dh);
      const Var kh = ops::slice_cols(g, k, head * dh, dh);
      const Var vh = ops::slice_cols(g, v, head * dh, dh);
      const Var scores = ops::scale(g, ops::matmul_nt(g, qh, kh), inv_sqrt_dh);
      heads.push_back(ops::matmul(g, ops::causal_softmax(g, scores), vh));
    }
    const Var attn = ops::matmul(g, ops::concat_cols(g, std::span<const Var>(heads)),
                                 b.at(names::layer(l, "wo")));
    x = ops::add(g, x, attn);

    const Var m = ops::rmsnorm(g, x, ops::add_scalar(g, b.at(names::layer(l, "mlp_norm")), T{1}));
    const Var gate = ops::silu(g, ops::matmul(g, m, b.at(names::layer(l, "w_gate"))));
    const Var up = ops::matmul(g, m, b.at(names::layer(l, "w_up")));
    x = ops::add(g, x, ops::matmul(g, ops::mul(g, gate, up), b.at(names::layer(l, "w_down"))));
  }
  const Var final_h = ops::rmsnorm(g, x, ops::add_scalar(g, b.at(names::kFinalNorm), T{1}));
  return ops::matmul_nt(g, final_h, b.at(names::kOutput));
}

template <typename T>
Tensor<T> forward(const Model<T>& model, std::span<const std::uint32_t> ids) {
  Graph<T> g;
  const Binding b = bind(g, model);
  const Var logits = forward(g, model, b, ids);
  return g.value(logits);
}

#define LANGADAPT_INSTANTIATE_MODEL(T)                                                        \
  template Model<T> init_model<T>(const ModelConfig&);                                        \
  template Model<T> extend_embeddings<T>(Model<T>, std::size_t, std::uint64_t);               \
  template Model<T> attach_lora<T>(Model<T>);                                                 \
  template FreezeMask standard_freeze_mask<T>(const Model<T>&);                                \
  template double trainable_fraction<T>(const Model<T>&);                                     \
  template Binding bind<T>(Graph<T>&, const Model<T>&);                                       \
  template Var forward<T>(Graph<T>&, const Model<T>&, const Binding&,                         \
                          std::span<const std::uint32_t>);                                    \
  template Tensor<T> forward<T>(const Model<T>&, std::span<const std::uint32_t>);

LANGADAPT_INSTANTIATE_MODEL(float)
LANGADAPT_INSTANTIATE_MODEL(double)

#undef LANGADAPT_INSTANTIATE_MODEL

}  // namespace langadapt::model
