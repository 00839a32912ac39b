#include "langadapt/model/config.hpp"

#include <string>

#include "langadapt/util/error.hpp"

namespace langadapt::model {

void ModelConfig::validate() const {
  if (n_layers == 0) throw ValidationError("n_layers must be at least 1");
  if (d_model == 0 || n_heads == 0) throw ValidationError("d_model and n_heads must be positive");
  if (d_model % n_heads != 0) {
    throw ValidationError("d_model " + std::to_string(d_model) + " is not divisible by n_heads " +
                          std::to_string(n_heads));
  }
  if (vocab_size < 260) {
    throw ValidationError("vocab_size must be at least 260 (256 bytes + 4 controls), got " +
                          std::to_string(vocab_size));
  }
  if (max_seq == 0) throw ValidationError("max_seq must be positive");
  if (lora_rank < 1) throw ValidationError("lora_rank must be at least 1");
  if (!(lora_alpha > 0.0)) throw ValidationError("lora_alpha must be positive");
  if (!(init_std > 0.0)) throw ValidationError("init_std must be positive");
}

}  // namespace langadapt::model
