#pragma once

#include <cstddef>
#include <cstdint>

namespace langadapt::model {

struct ModelConfig {
  std::size_t n_layers = 2;
  std::size_t d_model = 32;
  std::size_t n_heads = 4;
  std::size_t vocab_size = 260;
  std::size_t max_seq = 64;
  std::size_t lora_rank = 8;
  double lora_alpha = 16.0;
  std::uint64_t seed = 0;
  // Standard deviation of the normal weight initialisation.
  double init_std = 0.02;

  std::size_t head_dim() const { return d_model / n_heads; }
  // Width of the gated MLP hidden layer.
  std::size_t ffn_dim() const { return 4 * d_model; }
  double lora_scale() const { return lora_alpha / static_cast<double>(lora_rank); }

  // Throws ValidationError on an inconsistent configuration.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace langadapt::model
