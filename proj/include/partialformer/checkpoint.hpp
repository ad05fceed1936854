// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Model config <-> JSON and the binary checkpoint format.
//
// Checkpoint layout (all integers little-endian):
//   8 bytes   magic "PFCKPT\0\0"
//   u32       format version (kCheckpointVersion)
//   u64       step
//   u64 n     length of the config JSON, then n bytes of UTF-8 JSON
//   u64 e     entry count, then e entries of
//               u32 p, p bytes registry path
//               u32 r, r x u64 extents
//               prod(extents) x f64 values

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "partialformer/model.hpp"

namespace pf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

nlohmann::json model_config_to_json(const ModelConfig& config);
// Starts from defaults and applies every key of j. Unknown keys and wrongly
// typed values raise ConfigError naming the field; the result is validated.
ModelConfig model_config_from_json(const nlohmann::json& j);
// Applies the keys of j on top of an existing config without validating.
void apply_model_config_json(ModelConfig& config, const nlohmann::json& j);

struct CheckpointEntry {
  std::string path;
  Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  ModelConfig config;
  std::uint64_t step = 0;
  std::vector<CheckpointEntry> entries;
};

Checkpoint snapshot(const Model& model, std::uint64_t step);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint read_checkpoint(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const Model& model, std::uint64_t step = 0);
// Rebuilds the model from the embedded config and loads every parameter.
Model load_model(const std::filesystem::path& path);
Model model_from_checkpoint(const Checkpoint& checkpoint);

}  // namespace pf
