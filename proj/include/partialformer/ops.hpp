// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable primitives. Every function returns a fresh tensor and, when
// an input requires a gradient, records a backward closure on the tape.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "partialformer/rng.hpp"
#include "partialformer/tensor.hpp"

namespace pf {

// Additive logit value for masked positions. Anything at or below
// kMaskedThreshold is treated as masked by softmax_rows and gets exactly
// zero probability, so sentinels may be summed (A_G + local logits).
inline constexpr double kMaskSentinel = -1e9;
inline constexpr double kMaskedThreshold = -1e8;

// [m x k] * [k x n], or batched [B x m x k] * [B x k x n].
Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T: [m x k] * [n x k]^T, or batched [B x m x k] * [B x n x k]^T.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// 2-D transpose.
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Adds a [n] bias along the last axis.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// Adds y to every trailing block of x; y's shape must equal x's trailing
// extents (e.g. a [T_q x T_k] mask onto [H x T_q x T_k] logits).
Tensor add_broadcast(const Tensor& x, const Tensor& y);
// Like add_broadcast, but entries whose mask value is at or below
// kMaskedThreshold are set to exactly kMaskSentinel.
Tensor apply_mask(const Tensor& x, const Tensor& mask);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor reshape(const Tensor& x, Shape shape);

// [T x (H*dk)] -> [H x T x dk] and back.
Tensor split_heads(const Tensor& x, std::size_t heads);
Tensor merge_heads(const Tensor& x);

struct SoftmaxDiagnostics {
  std::size_t fully_masked_rows = 0;
};

// Softmax over the last axis with max subtraction. Masked entries (at or
// below kMaskedThreshold) receive exactly 0. A row with every entry masked
// yields all zeros and bumps diag->fully_masked_rows.
Tensor softmax_rows(const Tensor& x, SoftmaxDiagnostics* diag = nullptr);
Tensor log_softmax_rows(const Tensor& x);

// Per-row normalization of [T x d] with eps inside the square root.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

enum class Activation { relu, sigmoid, tanh, identity };

Activation parse_activation(std::string_view tag);
std::string to_string(Activation kind);

Tensor activation(const Tensor& x, Activation kind);
inline Tensor relu(const Tensor& x) { return activation(x, Activation::relu); }

// Row gather from a [V x d] table. Ids outside [0, V) raise InputError.
Tensor embedding(const Tensor& table, std::span<const int> ids);

// Inverted dropout; identity when p == 0.
Tensor dropout(const Tensor& x, double p, Rng& rng);

// Additive causal mask [T_q x T_k]: 0 where key j <= query i, sentinel above.
Tensor causal_mask(std::size_t t_q, std::size_t t_k);

}  // namespace pf
