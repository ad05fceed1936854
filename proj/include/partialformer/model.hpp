// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Encoder-decoder assembly for three architectures:
//   vanilla        pre-norm Transformer (attention + FFN sub-layers)
//   partialformer  unified sub-layers (attention with PG-FFN inside), head
//                  scaling and global logits A_G
//   vanilla_pgffn  vanilla layout with the FFN sub-layers folded into the
//                  encoder self-attention and decoder cross-attention as PG-FFNs

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "partialformer/attention.hpp"
#include "partialformer/ops.hpp"
#include "partialformer/pgffn.hpp"
#include "partialformer/rng.hpp"
#include "partialformer/tensor.hpp"

namespace pf {

enum class Architecture { vanilla, partialformer, vanilla_pgffn };

Architecture parse_architecture(std::string_view tag);
std::string to_string(Architecture arch);

struct ModelConfig {
  Architecture arch = Architecture::partialformer;
  std::size_t encoder_layers = 6;  // N
  std::size_t decoder_layers = 6;  // M (0 = encoder only)
  std::size_t model_dim = 512;     // d
  std::size_t head_dim = 64;       // d_k
  std::size_t encoder_heads = 8;
  std::size_t decoder_heads = 8;
  Activation gate_activation = Activation::relu;
  std::size_t encoder_ffn_ratio = 4;  // PG-FFN hidden = ratio * d_k
  std::size_t decoder_ffn_ratio = 2;
  std::size_t ffn_dim = 0;  // vanilla FFN hidden width; 0 means 4 * d
  std::size_t vocab_size = 34040;
  bool share_embeddings = true;
  std::size_t max_len = 256;
  bool global_logits_post_softmax = false;
  bool positional_encoding = true;
  double dropout = 0.1;
  double attention_dropout = 0.1;
  double relu_dropout = 0.1;
  double layer_norm_eps = 1e-5;
  std::uint64_t seed = 1;

  std::size_t effective_ffn_dim() const { return ffn_dim ? ffn_dim : 4 * model_dim; }
  HeadSpec encoder_spec() const;
  HeadSpec decoder_spec() const;
  // Throws ConfigError naming the first violated rule.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct NamedParameter {
  std::string path;
  Tensor tensor;
};

// Ordered, uniquely keyed parameter list.
class ParameterRegistry {
 public:
  Tensor& add(std::string path, Tensor tensor);
  const Tensor* find(std::string_view path) const;
  const Tensor& at(std::string_view path) const;
  const std::vector<NamedParameter>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_numel() const;
  void zero_grad();

 private:
  std::vector<NamedParameter> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct LayerNormParams {
  Tensor gain;
  Tensor bias;
};

struct FeedForwardParams {
  Tensor w1;  // [d x d_ffn]
  Tensor b1;
  Tensor w2;  // [d_ffn x d]
  Tensor b2;
};

enum class SublayerKind { attention, unified, feed_forward };

struct DropoutRates {
  double residual = 0.0;
  double attention = 0.0;
  double hidden = 0.0;  // FFN hidden units and gates
};

struct Sublayer {
  SublayerKind kind = SublayerKind::attention;
  AttentionSite site = AttentionSite::encoder_self;
  HeadSpec spec;
  LayerNormParams norm;
  AttentionBundle attn;    // attention, unified
  PGFFNParams pgffn;       // unified
  FeedForwardParams ffn;   // feed_forward
  bool uses_global = false;
  double norm_eps = 1e-5;
  DropoutRates dropout;
};

struct Layer {
  std::vector<Sublayer> sublayers;
};

struct Model {
  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
  // Parameters are shared handles; copies must be explicit via clone().
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  // Deep copy with identical parameter values.
  Model clone() const;
  // Copies values from another registry with identical paths and shapes.
  void assign_parameters(const ParameterRegistry& source);

  ModelConfig config;
  ParameterRegistry registry;
  Tensor src_embedding;      // [V x d]
  Tensor tgt_embedding;      // [V x d]; same tensor when shared
  Tensor output_projection;  // [V x d]; same tensor when shared
  Tensor positions;          // [max_len x d], constant
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
  LayerNormParams encoder_norm;
  LayerNormParams decoder_norm;
  std::optional<GlobalLogitParams> global_encoder;
  std::optional<GlobalLogitParams> global_decoder;
  std::optional<GlobalLogitParams> global_cross;
};

// Deterministic construction from the generator; every parameter lands in
// the registry under a unique dotted path.
Model build_model(const ModelConfig& config, Rng& rng);
// Convenience: seeds the generator from config.seed.
Model build_model(const ModelConfig& config);

struct SublayerTrace {
  SublayerKind kind = SublayerKind::attention;
  AttentionSite site = AttentionSite::encoder_self;
  Tensor attention_probs;  // [H x T_q x T_k]
  Tensor head_outputs;     // [H x T x d_k]: head_i, or O^i after the PG-FFN
  std::optional<HiddenProbe> ffn_hidden;
  std::size_t ffn_params = 0;
};

struct LayerTrace {
  Tensor state;  // layer output [T x d]
  std::vector<SublayerTrace> sublayers;
};

// Optional side channel collecting per-layer diagnostics.
struct ForwardTrace {
  bool capture_ffn_hidden = false;
  std::vector<LayerTrace> encoder;
  std::vector<LayerTrace> decoder;
  std::size_t sublayers_executed = 0;
  std::size_t global_logits_computed = 0;
  SoftmaxDiagnostics softmax;
};

struct ForwardOptions {
  bool training = false;  // enables dropout (needs rng)
  Rng* rng = nullptr;
  GateMode gate_mode = GateMode::computed;
  ForwardTrace* trace = nullptr;
};

struct EncoderOutput {
  Tensor output;      // final-normed [T x d]
  Tensor embeddings;  // scaled embeddings + positions, pre-stack
  std::vector<Tensor> states;
  std::optional<GlobalLogits> global;
};

// Scaled token embeddings plus sinusoidal positions.
Tensor embed(const Model& model, const Tensor& table, std::span<const int> ids, const ForwardOptions& options);

Tensor attention_sublayer(const Tensor& x, const Tensor* kv, const Sublayer& sub, const Tensor* mask,
                          const ForwardOptions& options, SublayerTrace* trace);
Tensor feed_forward_sublayer(const Tensor& x, const Sublayer& sub, const ForwardOptions& options,
                             SublayerTrace* trace);
// Pre-norm, attention with optional head expansion and A_G, gated PG-FFN on
// every head, head fusion, residual add.
Tensor unified_sublayer(const Tensor& x, const Tensor* kv, const GlobalLogits* global, const Sublayer& sub,
                        const Tensor* mask, const ForwardOptions& options, SublayerTrace* trace);

EncoderOutput encoder_forward(const Model& model, std::span<const int> src, const ForwardOptions& options = {});
// Teacher-forced logits [T x V]; tgt is the decoder input (bos-prefixed).
Tensor decoder_forward(const Model& model, std::span<const int> tgt, const EncoderOutput& encoded,
                       const ForwardOptions& options = {});
// Full encoder + decoder pass for any architecture.
Tensor forward(const Model& model, std::span<const int> src, std::span<const int> tgt,
               const ForwardOptions& options = {});
// Architecture-checked entry points.
Tensor vanilla_forward(const Model& model, std::span<const int> src, std::span<const int> tgt,
                       const ForwardOptions& options = {});
Tensor vanilla_pgffn_forward(const Model& model, std::span<const int> src, std::span<const int> tgt,
                             const ForwardOptions& options = {});

Tensor sinusoidal_positions(std::size_t max_len, std::size_t dim);

}  // namespace pf
