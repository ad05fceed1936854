// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/attention.hpp"

#include <atomic>
#include <cmath>

#include "partialformer/errors.hpp"

namespace pf {

namespace {

std::atomic<std::size_t> g_global_logit_calls{0};

void require_width(const char* op, const Tensor& x, std::size_t d) {
  if (x.rank() != 2 || x.dim(1) != d) {
    throw DimensionError(std::string(op) + ": input " + shape_str(x.shape()) + " does not have model width " +
                         std::to_string(d));
  }
}

void require_shape(const char* what, const Tensor& t, const Shape& expected) {
  if (!t.defined() || t.shape() != expected) {
    throw DimensionError(std::string(what) + ": expected " + shape_str(expected) + ", got " +
                         (t.defined() ? shape_str(t.shape()) : std::string("undefined")));
  }
}

}  // namespace

std::string to_string(AttentionSite site) {
  switch (site) {
    case AttentionSite::encoder_self:
      return "encoder_self";
    case AttentionSite::decoder_self:
      return "decoder_self";
    case AttentionSite::cross:
      return "cross";
  }
  return "encoder_self";
}

void HeadSpec::validate() const {
  if (heads == 0 || inter_heads == 0 || head_dim == 0 || model_dim == 0) {
    throw ConfigError("head spec requires H, H_int, d_k and d to be at least 1");
  }
}

HeadSpec HeadSpec::for_heads(std::size_t heads, std::size_t head_dim, std::size_t model_dim) {
  if (head_dim == 0 || model_dim % head_dim != 0) {
    throw ConfigError("d_k (" + std::to_string(head_dim) + ") must divide d (" + std::to_string(model_dim) +
                      ") to derive the intermediate head count");
  }
  HeadSpec spec{heads, model_dim / head_dim, head_dim, model_dim};
  spec.validate();
  return spec;
}

void check_bundle(const AttentionBundle& bundle, const HeadSpec& spec) {
  const std::size_t d = spec.model_dim;
  require_shape("W_Q", bundle.w_q, {d, spec.inter_heads * spec.head_dim});
  require_shape("W_K", bundle.w_k, {d, spec.inter_heads * spec.head_dim});
  require_shape("W_V", bundle.w_v, {d, spec.heads * spec.head_dim});
  require_shape("W_O", bundle.w_o, {spec.heads * spec.head_dim, d});
  if (spec.head_scaling() != bundle.expansion.has_value()) {
    throw DimensionError("expansion MLP must be present exactly when head scaling is active");
  }
  if (bundle.expansion) {
    const std::size_t mid = spec.expansion_hidden();
    require_shape("expansion W1", bundle.expansion->w1, {spec.inter_heads, mid});
    require_shape("expansion b1", bundle.expansion->b1, {mid});
    require_shape("expansion W2", bundle.expansion->w2, {mid, spec.heads});
    require_shape("expansion b2", bundle.expansion->b2, {spec.heads});
  }
}

ProjectedQKV project_qkv(const Tensor& x_q, const Tensor& x_kv, const AttentionBundle& bundle,
                         const HeadSpec& spec) {
  require_width("project_qkv", x_q, spec.model_dim);
  require_width("project_qkv", x_kv, spec.model_dim);
  return {
      split_heads(matmul(x_q, bundle.w_q), spec.inter_heads),
      split_heads(matmul(x_kv, bundle.w_k), spec.inter_heads),
      split_heads(matmul(x_kv, bundle.w_v), spec.heads),
  };
}

Tensor attention_logits(const Tensor& q, const Tensor& k, std::size_t head_dim, const Tensor* mask) {
  if (q.rank() != 3 || k.rank() != 3 || q.dim(0) != k.dim(0) || q.dim(2) != k.dim(2)) {
    throw DimensionError("attention_logits: incompatible Q " + shape_str(q.shape()) + " and K " +
                         shape_str(k.shape()));
  }
  Tensor s = scale(matmul_nt(q, k), 1.0 / std::sqrt(static_cast<double>(head_dim)));
  if (mask) s = apply_mask(s, *mask);
  return s;
}

Tensor expand_heads(const Tensor& s, const HeadExpansionParams& mlp, const HeadSpec& spec) {
  if (!spec.head_scaling()) {
    throw UsageError("expand_heads called with head scaling inactive; use the logits directly");
  }
  if (s.rank() != 3 || s.dim(0) != spec.inter_heads) {
    throw DimensionError("expand_heads: expected [" + std::to_string(spec.inter_heads) + " x T_q x T_k], got " +
                         shape_str(s.shape()));
  }
  const std::size_t t_q = s.dim(1), t_k = s.dim(2);
  // Rows of `grid` are positions, columns are heads.
  Tensor grid = transpose(reshape(s, {spec.inter_heads, t_q * t_k}));
  Tensor hidden = relu(add_bias(matmul(grid, mlp.w1), mlp.b1));
  Tensor out = add_bias(matmul(hidden, mlp.w2), mlp.b2);
  return reshape(transpose(out), {spec.heads, t_q, t_k});
}

GlobalLogits compute_global_logits(const Tensor& emb_q, const Tensor& emb_k, const GlobalLogitParams& params,
                                   const HeadSpec& spec, AttentionSite site, const Tensor* mask,
                                   bool post_softmax) {
  require_width("compute_global_logits", emb_q, spec.model_dim);
  require_width("compute_global_logits", emb_k, spec.model_dim);
  g_global_logit_calls.fetch_add(1, std::memory_order_relaxed);
  Tensor q = split_heads(matmul(emb_q, params.w_q), spec.heads);
  Tensor k = split_heads(matmul(emb_k, params.w_k), spec.heads);
  Tensor logits = attention_logits(q, k, spec.head_dim, mask);
  if (post_softmax) logits = softmax_rows(logits);
  return {site, std::move(logits)};
}

std::size_t global_logits_compute_count() { return g_global_logit_calls.load(std::memory_order_relaxed); }

Tensor attend(const Tensor& s, const GlobalLogits* global, const Tensor& v, const AttendOptions& options) {
  if (s.rank() != 3 || v.rank() != 3 || s.dim(0) != v.dim(0) || s.dim(2) != v.dim(1)) {
    throw DimensionError("attend: logits " + shape_str(s.shape()) + " incompatible with values " +
                         shape_str(v.shape()));
  }
  Tensor logits = s;
  if (global) {
    if (global->logits.shape() != s.shape()) {
      throw DimensionError("attend: global logits " + shape_str(global->logits.shape()) +
                           " do not match local logits " + shape_str(s.shape()));
    }
    logits = add(logits, global->logits);
  }
  if (options.mask) logits = apply_mask(logits, *options.mask);
  Tensor probs = softmax_rows(logits, options.diagnostics);
  if (options.probs_out) *options.probs_out = probs;
  if (options.dropout > 0.0 && options.rng) probs = dropout(probs, options.dropout, *options.rng);
  return matmul(probs, v);
}

}  // namespace pf
