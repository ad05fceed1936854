// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-head attention pieces shared by the vanilla and PartialFormer paths:
// projections, scaled dot-product logits, the head-expansion MLP used for
// head scaling, the once-per-forward global logits A_G, and aggregation.

#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "partialformer/ops.hpp"
#include "partialformer/tensor.hpp"

namespace pf {

enum class AttentionSite { encoder_self, decoder_self, cross };

std::string to_string(AttentionSite site);

// Head geometry of one attention site.
struct HeadSpec {
  std::size_t heads = 1;        // target head count H
  std::size_t inter_heads = 1;  // Q/K head count before expansion
  std::size_t head_dim = 1;     // d_k
  std::size_t model_dim = 1;    // d

  // Head scaling is on whenever the heads are decoupled from d / d_k.
  bool head_scaling() const { return heads != inter_heads || heads * head_dim != model_dim; }
  std::size_t expansion_hidden() const { return 2 * heads; }
  void validate() const;

  // Intermediate head count is d / d_k; d must be a multiple of d_k.
  static HeadSpec for_heads(std::size_t heads, std::size_t head_dim, std::size_t model_dim);
};

// Two-layer MLP over the head axis: H_int -> 2H (ReLU) -> H.
struct HeadExpansionParams {
  Tensor w1;  // [H_int x h_mid]
  Tensor b1;  // [h_mid]
  Tensor w2;  // [h_mid x H]
  Tensor b2;  // [H]
};

struct AttentionBundle {
  AttentionSite site = AttentionSite::encoder_self;
  Tensor w_q;  // [d x H_int*d_k]
  Tensor w_k;  // [d x H_int*d_k]
  Tensor w_v;  // [d x H*d_k]
  Tensor w_o;  // [H*d_k x d], H row blocks of d_k
  std::optional<HeadExpansionParams> expansion;  // present iff head scaling
};

struct GlobalLogitParams {
  Tensor w_q;  // [d x H*d_k]
  Tensor w_k;  // [d x H*d_k]
};

// Pre-softmax logits computed once per forward from embeddings and shared by
// every layer of one site.
struct GlobalLogits {
  AttentionSite site = AttentionSite::encoder_self;
  Tensor logits;  // [H x T_q x T_k]
};

struct ProjectedQKV {
  Tensor q;  // [H_int x T_q x d_k]
  Tensor k;  // [H_int x T_k x d_k]
  Tensor v;  // [H x T_k x d_k]
};

// Throws DimensionError when parameter shapes disagree with the spec.
void check_bundle(const AttentionBundle& bundle, const HeadSpec& spec);

ProjectedQKV project_qkv(const Tensor& x_q, const Tensor& x_kv, const AttentionBundle& bundle,
                         const HeadSpec& spec);

// S[h,i,j] = Q[h,i].K[h,j] / sqrt(d_k), plus the additive mask when given.
Tensor attention_logits(const Tensor& q, const Tensor& k, std::size_t head_dim,
                        const Tensor* mask = nullptr);

// Maps every (i, j) head vector of S through the expansion MLP. Throws
// UsageError when head scaling is inactive for the spec.
Tensor expand_heads(const Tensor& s, const HeadExpansionParams& mlp, const HeadSpec& spec);

// A_G from embeddings with H heads produced directly. With post_softmax the
// row-normalized maps are returned instead of logits.
GlobalLogits compute_global_logits(const Tensor& emb_q, const Tensor& emb_k, const GlobalLogitParams& params,
                                   const HeadSpec& spec, AttentionSite site, const Tensor* mask = nullptr,
                                   bool post_softmax = false);

// Number of compute_global_logits calls made by this process so far.
std::size_t global_logits_compute_count();

struct AttendOptions {
  const Tensor* mask = nullptr;  // [T_q x T_k] additive
  double dropout = 0.0;
  Rng* rng = nullptr;
  SoftmaxDiagnostics* diagnostics = nullptr;
  Tensor* probs_out = nullptr;  // receives A when set
};

// heads[h] = softmax(S'[h] + A_G[h] + mask) V[h].
Tensor attend(const Tensor& s, const GlobalLogits* global, const Tensor& v, const AttendOptions& options = {});

}  // namespace pf
