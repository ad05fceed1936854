// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>

#include "partialformer/errors.hpp"

namespace pf {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'P', 'F', 'C', 'K', 'P', 'T', '\0', '\0'};

std::size_t as_size(const json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0)) {
    throw ConfigError(key + ": expected a non-negative integer, got " + v.dump());
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + ": expected a number, got " + v.dump());
  return v.get<double>();
}

bool as_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key + ": expected true or false, got " + v.dump());
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + ": expected a string, got " + v.dump());
  return v.get<std::string>();
}

using Setter = std::function<void(ModelConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"arch", [](ModelConfig& c, const json& v) { c.arch = parse_architecture(as_string(v, "arch")); }},
      {"N", [](ModelConfig& c, const json& v) { c.encoder_layers = as_size(v, "N"); }},
      {"M", [](ModelConfig& c, const json& v) { c.decoder_layers = as_size(v, "M"); }},
      {"d", [](ModelConfig& c, const json& v) { c.model_dim = as_size(v, "d"); }},
      {"d_k", [](ModelConfig& c, const json& v) { c.head_dim = as_size(v, "d_k"); }},
      {"H_enc", [](ModelConfig& c, const json& v) { c.encoder_heads = as_size(v, "H_enc"); }},
      {"H_dec", [](ModelConfig& c, const json& v) { c.decoder_heads = as_size(v, "H_dec"); }},
      {"gate_sigma",
       [](ModelConfig& c, const json& v) {
         try {
           c.gate_activation = parse_activation(as_string(v, "gate_sigma"));
         } catch (const ConfigError& e) {
           throw ConfigError(std::string("gate_sigma: ") + e.what());
         }
       }},
      {"r_enc", [](ModelConfig& c, const json& v) { c.encoder_ffn_ratio = as_size(v, "r_enc"); }},
      {"r_dec", [](ModelConfig& c, const json& v) { c.decoder_ffn_ratio = as_size(v, "r_dec"); }},
      {"d_ffn", [](ModelConfig& c, const json& v) { c.ffn_dim = as_size(v, "d_ffn"); }},
      {"vocab_size", [](ModelConfig& c, const json& v) { c.vocab_size = as_size(v, "vocab_size"); }},
      {"share_embeddings",
       [](ModelConfig& c, const json& v) { c.share_embeddings = as_bool(v, "share_embeddings"); }},
      {"max_len", [](ModelConfig& c, const json& v) { c.max_len = as_size(v, "max_len"); }},
      {"a_g_post_softmax",
       [](ModelConfig& c, const json& v) { c.global_logits_post_softmax = as_bool(v, "a_g_post_softmax"); }},
      {"positional_encoding",
       [](ModelConfig& c, const json& v) { c.positional_encoding = as_bool(v, "positional_encoding"); }},
      {"dropout", [](ModelConfig& c, const json& v) { c.dropout = as_real(v, "dropout"); }},
      {"attention_dropout",
       [](ModelConfig& c, const json& v) { c.attention_dropout = as_real(v, "attention_dropout"); }},
      {"relu_dropout", [](ModelConfig& c, const json& v) { c.relu_dropout = as_real(v, "relu_dropout"); }},
      {"layer_norm_eps", [](ModelConfig& c, const json& v) { c.layer_norm_eps = as_real(v, "layer_norm_eps"); }},
      {"seed", [](ModelConfig& c, const json& v) { c.seed = as_size(v, "seed"); }},
  };
  return table;
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw IoError("truncated checkpoint " + path.string());
  }
  return value;
}

}  // namespace

json model_config_to_json(const ModelConfig& c) {
  json j = json::object();
  j["arch"] = to_string(c.arch);
  j["N"] = c.encoder_layers;
  j["M"] = c.decoder_layers;
  j["d"] = c.model_dim;
  j["d_k"] = c.head_dim;
  j["H_enc"] = c.encoder_heads;
  j["H_dec"] = c.decoder_heads;
  j["gate_sigma"] = to_string(c.gate_activation);
  j["r_enc"] = c.encoder_ffn_ratio;
  j["r_dec"] = c.decoder_ffn_ratio;
  j["d_ffn"] = c.ffn_dim;
  j["vocab_size"] = c.vocab_size;
  j["share_embeddings"] = c.share_embeddings;
  j["max_len"] = c.max_len;
  j["a_g_post_softmax"] = c.global_logits_post_softmax;
  j["positional_encoding"] = c.positional_encoding;
  j["dropout"] = c.dropout;
  j["attention_dropout"] = c.attention_dropout;
  j["relu_dropout"] = c.relu_dropout;
  j["layer_norm_eps"] = c.layer_norm_eps;
  j["seed"] = c.seed;
  return j;
}

void apply_model_config_json(ModelConfig& config, const json& j) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError("model." + key + ": unknown key");
    it->second(config, value);
  }
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig config;
  apply_model_config_json(config, j);
  config.validate();
  return config;
}

Checkpoint snapshot(const Model& model, std::uint64_t step) {
  Checkpoint ck;
  ck.config = model.config;
  ck.step = step;
  for (const auto& e : model.registry.entries()) {
    auto data = e.tensor.data();
    ck.entries.push_back({e.path, e.tensor.shape(), {data.begin(), data.end()}});
  }
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, ck.step);
  const std::string header = model_config_to_json(ck.config).dump();
  put<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<std::uint64_t>(out, ck.entries.size());
  for (const auto& e : ck.entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.path.size()));
    out.write(e.path.data(), static_cast<std::streamsize>(e.path.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.shape.size()));
    for (std::size_t extent : e.shape) put<std::uint64_t>(out, extent);
    out.write(reinterpret_cast<const char*>(e.values.data()),
              static_cast<std::streamsize>(e.values.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed while writing " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw IoError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw IoError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.step = get<std::uint64_t>(in, path);
  std::string header(get<std::uint64_t>(in, path), '\0');
  if (!in.read(header.data(), static_cast<std::streamsize>(header.size()))) {
    throw IoError("truncated checkpoint " + path.string());
  }
  try {
    ck.config = model_config_from_json(json::parse(header));
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": corrupt config header: " + e.what());
  }
  const auto count = get<std::uint64_t>(in, path);
  for (std::uint64_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    e.path.resize(get<std::uint32_t>(in, path));
    if (!in.read(e.path.data(), static_cast<std::streamsize>(e.path.size()))) {
      throw IoError("truncated checkpoint " + path.string());
    }
    const auto rank = get<std::uint32_t>(in, path);
    for (std::uint32_t r = 0; r < rank; ++r) e.shape.push_back(get<std::uint64_t>(in, path));
    e.values.resize(shape_numel(e.shape));
    if (!in.read(reinterpret_cast<char*>(e.values.data()),
                 static_cast<std::streamsize>(e.values.size() * sizeof(double)))) {
      throw IoError("truncated checkpoint " + path.string());
    }
    ck.entries.push_back(std::move(e));
  }
  return ck;
}

void save_model(const std::filesystem::path& path, const Model& model, std::uint64_t step) {
  write_checkpoint(path, snapshot(model, step));
}

Model model_from_checkpoint(const Checkpoint& ck) {
  Model model = build_model(ck.config);
  const auto& entries = model.registry.entries();
  if (entries.size() != ck.entries.size()) {
    throw IoError("checkpoint has " + std::to_string(ck.entries.size()) + " entries, model expects " +
                  std::to_string(entries.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& src = ck.entries[i];
    if (src.path != entries[i].path || src.shape != entries[i].tensor.shape()) {
      throw IoError("checkpoint entry '" + src.path + "' does not match model parameter '" + entries[i].path + "'");
    }
    Tensor t = entries[i].tensor;
    std::copy(src.values.begin(), src.values.end(), t.mutable_data().begin());
  }
  return model;
}

Model load_model(const std::filesystem::path& path) { return model_from_checkpoint(read_checkpoint(path)); }

}  // namespace pf
