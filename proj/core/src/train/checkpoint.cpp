#include "langadapt/train/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <json.hpp>

#include "langadapt/model/transformer.hpp"
#include "langadapt/util/error.hpp"
#include "langadapt/util/files.hpp"

namespace langadapt::train {

namespace {

using json = nlohmann::json;

constexpr std::string_view kMagic = "BLSM";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

void put_floats(std::string& out, std::span<const float> values) {
  for (const float f : values) put_u32(out, std::bit_cast<std::uint32_t>(f));
}

json config_to_json(const model::ModelConfig& c) {
  return {{"n_layers", c.n_layers},   {"d_model", c.d_model},     {"n_heads", c.n_heads},
          {"vocab_size", c.vocab_size}, {"max_seq", c.max_seq},   {"lora_rank", c.lora_rank},
          {"lora_alpha", c.lora_alpha}, {"seed", c.seed},         {"init_std", c.init_std}};
}

model::ModelConfig config_from_json(const json& j) {
  model::ModelConfig c;
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_seq = j.at("max_seq").get<std::size_t>();
  c.lora_rank = j.at("lora_rank").get<std::size_t>();
  c.lora_alpha = j.at("lora_alpha").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.init_std = j.at("init_std").get<double>();
  return c;
}

struct Framed {
  json header;
  std::string_view payload;
};

Framed unframe(std::string_view bytes, const std::string& source) {
  const auto fail = [&](const std::string& msg) -> Framed {
    throw ValidationError(source + ": " + msg);
  };
  if (bytes.size() < 4 || bytes.substr(0, 4) != kMagic) {
    return fail("not a checkpoint (bad magic)");
  }
  if (bytes.size() < 12 + 8) return fail("truncated checkpoint");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != kCheckpointVersion) {
    return fail("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(bytes, 8);
  if (12 + static_cast<std::size_t>(header_len) + 8 > bytes.size()) {
    return fail("truncated checkpoint header");
  }
  const std::uint64_t stored = get_u64(bytes, bytes.size() - 8);
  if (fnv1a64(bytes.substr(0, bytes.size() - 8)) != stored) {
    return fail("checksum mismatch");
  }
  Framed f;
  try {
    f.header = json::parse(bytes.substr(12, header_len));
  } catch (const json::parse_error& e) {
    return fail(std::string("corrupt header: ") + e.what());
  }
  f.payload = bytes.substr(12 + header_len, bytes.size() - 8 - 12 - header_len);
  return f;
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kExpand:
      return "expand";
    case Stage::kPretrain:
      return "pretrain";
    case Stage::kSft:
      return "sft";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view s) {
  for (const Stage st : {Stage::kExpand, Stage::kPretrain, Stage::kSft}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

bool Checkpoint::has_stage(Stage stage) const {
  return std::find(stages.begin(), stages.end(), stage) != stages.end();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  if (ckpt.vocab.size() != m.config.vocab_size) {
    throw ValidationError("checkpoint: vocabulary has " + std::to_string(ckpt.vocab.size()) +
                          " entries but the model expects " + std::to_string(m.config.vocab_size));
  }
  json header;
  header["config"] = config_to_json(m.config);
  header["vocab_size"] = m.config.vocab_size;
  header["old_vocab_size"] = m.old_vocab_size;
  json stages = json::array();
  for (const Stage s : ckpt.stages) stages.push_back(std::string(to_string(s)));
  header["stages"] = stages;
  header["lora_attached"] = !m.adapters.empty();
  json adapters = json::array();
  for (const auto& a : m.adapters) {
    adapters.push_back({{"layer", a.layer},
                        {"target", std::string(model::to_string(a.target))},
                        {"alpha", a.alpha}});
  }
  header["adapters"] = adapters;
  json index = json::array();
  std::string payload;
  for (const auto& [name, tensor] : m.named_tensors()) {
    index.push_back({{"name", name}, {"shape", tensor->shape()}, {"offset", payload.size()}});
    put_floats(payload, tensor->data());
  }
  header["tensors"] = index;
  header["vocab"] = ckpt.vocab.to_text();
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(12 + header_text.size() + payload.size() + 8);
  out.append(kMagic);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.append(header_text);
  out.append(payload);
  put_u64(out, fnv1a64(out));
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source) {
  const Framed f = unframe(bytes, source);
  try {
    const json& h = f.header;
    model::Model<float> m;
    m.config = config_from_json(h.at("config"));
    m.config.validate();
    m.old_vocab_size = h.at("old_vocab_size").get<std::size_t>();
    // Shapes come from the index; adapters are matched up by name below.
    for (const auto& a : h.at("adapters")) {
      model::LoraAdapter<float> adapter;
      adapter.layer = a.at("layer").get<std::size_t>();
      const std::string target = a.at("target").get<std::string>();
      if (target == "q") {
        adapter.target = model::LoraTarget::kQuery;
      } else if (target == "k") {
        adapter.target = model::LoraTarget::kKey;
      } else if (target == "v") {
        adapter.target = model::LoraTarget::kValue;
      } else {
        throw ValidationError("unknown adapter target '" + target + "'");
      }
      adapter.alpha = a.at("alpha").get<double>();
      m.adapters.push_back(std::move(adapter));
    }
    const auto load_tensor = [&](const json& entry) {
      const auto shape = entry.at("shape").get<numerics::Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      const std::size_t count = numerics::element_count(shape);
      if (offset % 4 != 0 || offset > f.payload.size() || count * 4 > f.payload.size() - offset) {
        throw ValidationError("tensor " + entry.at("name").get<std::string>() +
                              " lies outside the payload");
      }
      std::vector<float> data(count);
      for (std::size_t i = 0; i < count; ++i) {
        data[i] = std::bit_cast<float>(get_u32(f.payload, offset + 4 * i));
      }
      return numerics::Tensor<float>(shape, std::move(data));
    };
    std::size_t payload_used = 0;
    for (const auto& entry : h.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      numerics::Tensor<float> t = load_tensor(entry);
      payload_used += t.size() * 4;
      bool placed = false;
      for (auto& adapter : m.adapters) {
        if (name == adapter.a_name()) {
          adapter.a = std::move(t);
          placed = true;
          break;
        }
        if (name == adapter.b_name()) {
          adapter.b = std::move(t);
          placed = true;
          break;
        }
      }
      if (!placed) m.params.add(name, std::move(t));
    }
    if (payload_used != f.payload.size()) {
      throw ValidationError("payload size does not match the tensor index");
    }
    // Round trip through init_model's layout to catch missing or
    // misshapen tensors.
    model::ModelConfig shape_config = m.config;
    const auto reference = model::init_model<float>(shape_config);
    if (reference.params.order != m.params.order) {
      throw ValidationError("tensor set does not match the model configuration");
    }
    for (const auto& name : reference.params.order) {
      if (reference.params.at(name).shape() != m.params.at(name).shape()) {
        throw ValidationError("tensor " + name + " has the wrong shape");
      }
    }
    const numerics::Shape a_shape{m.config.d_model, m.config.lora_rank};
    const numerics::Shape b_shape{m.config.lora_rank, m.config.d_model};
    for (const auto& adapter : m.adapters) {
      if (adapter.a.shape() != a_shape || adapter.b.shape() != b_shape) {
        throw ValidationError("adapter " + adapter.base_name() + " has the wrong shape");
      }
    }
    m.mask = model::standard_freeze_mask(m);

    std::vector<Stage> stages;
    for (const auto& s : h.at("stages")) {
      const auto st = parse_stage(s.get<std::string>());
      if (!st) throw ValidationError("unknown stage '" + s.get<std::string>() + "'");
      stages.push_back(*st);
    }
    tokenizer::Vocabulary vocab =
        tokenizer::parse_vocab(h.at("vocab").get<std::string>(), source + "#vocab");
    if (vocab.size() != m.config.vocab_size) {
      throw ValidationError("embedded vocabulary size differs from the model");
    }
    return Checkpoint{std::move(m), std::move(vocab), std::move(stages)};
  } catch (const json::exception& e) {
    throw ValidationError(source + ": malformed header: " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(source + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_atomic(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

std::string inspect_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  Framed f = unframe(bytes, path.string());
  f.header["vocab"] = std::to_string(f.header.at("vocab").get<std::string>().size()) + " bytes";
  f.header["payload_bytes"] = f.payload.size();
  return f.header.dump(2);
}

}  // namespace langadapt::train
