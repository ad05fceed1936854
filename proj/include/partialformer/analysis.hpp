// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Budget accounting (closed-form parameter and MAC counts) and behavioural
// metrics over forward traces: head diversity D_output, token uniformity and
// FFN activation statistics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "partialformer/model.hpp"

namespace pf {

struct CountEntry {
  std::string module;
  std::uint64_t count = 0;
  bool operator==(const CountEntry&) const = default;
};

struct ParamBreakdown {
  std::vector<CountEntry> modules;
  std::uint64_t total = 0;
  bool operator==(const ParamBreakdown&) const = default;
};

// Closed form, derived from the config alone (never from a built registry).
ParamBreakdown count_params(const ModelConfig& config);

inline constexpr std::string_view kMacConvention =
    "matmul-macs/encoder-once/decoder-full-recompute-per-step/output-proj-over-prefix";

struct MacBreakdown {
  std::vector<CountEntry> parts;
  std::uint64_t total = 0;
  std::size_t src_len = 0;
  std::size_t tgt_len = 0;
  std::string convention{kMacConvention};
  bool operator==(const MacBreakdown&) const = default;
};

// One encoder pass over src_len tokens plus tgt_len decoding steps, each
// recomputing the full prefix (no cache) including the output projection
// over every prefix position. Only multiply-accumulates of linear maps and
// attention products are counted; elementwise work is excluded.
MacBreakdown count_macs(const ModelConfig& config, std::size_t src_len = 20, std::size_t tgt_len = 20);

struct HeadDiversity {
  std::optional<double> value;  // absent when every head has zero norm
  std::size_t zero_norm_heads = 0;
};

// exp(-(1/H'^2) sum_ij |cos(O^i, O^j)|) over the H' heads with nonzero norm;
// each head is flattened over [T x d_k].
HeadDiversity head_diversity(const Tensor& heads);

struct TokenUniformity {
  std::optional<double> value;  // absent when no pair survives
  std::size_t excluded_pairs = 0;
};

// Mean Pearson correlation over token pairs i < j of a [T x d] state.
TokenUniformity token_uniformity(const Tensor& states);

struct FfnStats {
  double n_act = 0.0;  // mean count of strictly positive hidden units per token
  std::size_t hidden_dim = 0;
  double r_act = 0.0;
  double eta_ffn = 0.0;
  std::size_t param_count = 0;
  bool operator==(const FfnStats&) const = default;
};

// Throws UsageError when the probe is missing (tracing not enabled).
FfnStats ffn_activation_stats(const std::optional<HiddenProbe>& probe, std::size_t param_count);
// Sums the FFN-bearing sub-layers of one layer into a layer-level record.
FfnStats merge_ffn_stats(const std::vector<FfnStats>& parts);

// Concatenated FFN hidden width per layer (encoder layers then decoder
// layers): H * r * d_k per PG-FFN, d_ffn for vanilla FFN sub-layers.
std::vector<std::size_t> ffn_hidden_dims(const ModelConfig& config);

struct LayerMetrics {
  std::string stack;  // "encoder" or "decoder"
  std::size_t index = 0;
  std::optional<double> token_uniformity;
  std::optional<double> head_diversity;
  std::optional<FfnStats> ffn;
  std::size_t zero_norm_heads = 0;
  std::size_t zero_variance_pairs = 0;
  bool operator==(const LayerMetrics&) const = default;
};

inline constexpr int kReportSchemaVersion = 1;

struct AnalysisReport {
  std::string label;
  ModelConfig config;
  ParamBreakdown params;
  std::optional<MacBreakdown> macs;
  std::vector<LayerMetrics> layers;  // N encoder rows then M decoder rows
  std::size_t samples = 0;
  bool operator==(const AnalysisReport&) const = default;
};

// Report with budgets filled and one empty metrics row per layer.
AnalysisReport make_report(const ModelConfig& config, std::string label = {});

using Sample = std::pair<std::vector<int>, std::vector<int>>;  // (src, decoder input)

// Runs the model on every sample with tracing and fills the per-layer
// metrics, averaged over samples. Forwards run on up to `jobs` threads; the
// result does not depend on `jobs`.
void measure_behaviour(const Model& model, const std::vector<Sample>& samples, AnalysisReport& report,
                       std::size_t jobs = 1);

// Mean over layers with a defined D_output (both stacks).
std::optional<double> mean_head_diversity(const AnalysisReport& report);

enum class ReportFormat { json, csv };
ReportFormat parse_report_format(std::string_view tag);

std::string emit_report(const AnalysisReport& report, ReportFormat format);
std::string emit_report(const AnalysisReport& report, std::string_view format);
AnalysisReport parse_report_json(std::string_view text);
// CSV carries the per-layer rows only.
std::vector<LayerMetrics> parse_report_csv(std::string_view text);

}  // namespace pf
