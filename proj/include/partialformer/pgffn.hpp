// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Partial-level gated FFN: one small FFN (d_k -> r*d_k -> d_k) shared by all
// heads of a sub-layer, with head-specific gates G^i = sigma(X W_i^G).

#pragma once

#include <cstddef>
#include <vector>

#include "partialformer/ops.hpp"
#include "partialformer/tensor.hpp"

namespace pf {

struct PGFFNParams {
  Tensor w1;          // [d_k x d_ffn']
  Tensor b1;          // [d_ffn']
  Tensor w2;          // [d_ffn' x d_k]
  Tensor b2;          // [d_k]
  Tensor w_gate;      // [d x H*d_k]; column block i is W_i^G
  std::size_t heads = 1;
  Activation gate_activation = Activation::relu;

  std::size_t head_dim() const { return w1.dim(0); }
  std::size_t hidden_dim() const { return w1.dim(1); }
  // Weights + biases of the shared FFN (gates excluded).
  std::size_t ffn_param_count() const;
};

// Post-ReLU hidden activations, token-major: values[t * width + c] with the
// per-head hidden blocks concatenated along c.
struct HiddenProbe {
  std::size_t tokens = 0;
  std::size_t width = 0;
  std::vector<double> values;
};

enum class GateMode {
  computed,
  open,  // all-ones override used for reduction checks
};

// ReLU(x W1 + b1) W2 + b2 over the last axis of a [.. x d_k] tensor.
Tensor small_ffn(const Tensor& head, const PGFFNParams& params, HiddenProbe* probe = nullptr,
                 double hidden_dropout = 0.0, Rng* rng = nullptr);

// [T x d] -> [H x T x d_k].
Tensor generate_gates(const Tensor& x, const PGFFNParams& params);

// O[i] = G[i] * small_ffn(heads[i]). Probe, when given, receives the hidden
// activations of all heads concatenated per token.
Tensor pg_ffn(const Tensor& heads, const Tensor& gates, const PGFFNParams& params, HiddenProbe* probe = nullptr,
              double hidden_dropout = 0.0, Rng* rng = nullptr);

// sum_i O[i] W_O[i] for [H x T x d_k] outputs and [H*d_k x d] W_O.
Tensor fuse_heads(const Tensor& o, const Tensor& w_o);

}  // namespace pf
