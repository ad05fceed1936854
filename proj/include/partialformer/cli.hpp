// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: run configs, dotted overrides and the
// train / analyze / count-params / count-macs / decode / compare commands.

#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "partialformer/model.hpp"
#include "partialformer/training.hpp"

namespace pf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

struct AnalysisOptions {
  std::size_t samples = 32;  // eval examples traced for behavioural metrics
  std::size_t src_len = 20;  // MAC accounting lengths
  std::size_t tgt_len = 20;
  std::string format = "json";
  bool operator==(const AnalysisOptions&) const = default;
};

struct RunConfig {
  ModelConfig model;
  TaskSpec task;
  TrainConfig train;
  AnalysisOptions analysis;
  DecodeOptions decode;

  // Throws ConfigError naming the first invalid field.
  void validate() const;
  bool operator==(const RunConfig&) const;
};

nlohmann::json to_json(const RunConfig& config);
// Starts from defaults and applies every section present. Unknown sections
// and keys raise ConfigError; the result is validated.
RunConfig run_config_from_json(const nlohmann::json& j);

// Applies "section.key=value" to a config document. The value is parsed as
// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, std::string_view assignment);

// Entry point behind the partialformer tool; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pf::cli
