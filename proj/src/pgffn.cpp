// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/pgffn.hpp"

#include <algorithm>

#include "partialformer/errors.hpp"

namespace pf {

std::size_t PGFFNParams::ffn_param_count() const { return w1.numel() + b1.numel() + w2.numel() + b2.numel(); }

Tensor small_ffn(const Tensor& head, const PGFFNParams& params, HiddenProbe* probe, double hidden_dropout,
                 Rng* rng) {
  const std::size_t dk = params.head_dim();
  if (head.shape().back() != dk) {
    throw DimensionError("small_ffn: head width " + std::to_string(head.shape().back()) +
                         " does not match d_k = " + std::to_string(dk));
  }
  Shape out_shape = head.shape();
  const std::size_t rows = head.numel() / dk;
  Tensor flat = reshape(head, {rows, dk});
  Tensor hidden = relu(add_bias(matmul(flat, params.w1), params.b1));
  if (probe) {
    probe->tokens = rows;
    probe->width = params.hidden_dim();
    probe->values.assign(hidden.data().begin(), hidden.data().end());
  }
  if (hidden_dropout > 0.0 && rng) hidden = dropout(hidden, hidden_dropout, *rng);
  Tensor out = add_bias(matmul(hidden, params.w2), params.b2);
  return reshape(out, std::move(out_shape));
}

Tensor generate_gates(const Tensor& x, const PGFFNParams& params) {
  if (x.rank() != 2 || x.dim(1) != params.w_gate.dim(0)) {
    throw DimensionError("generate_gates: input " + shape_str(x.shape()) + " incompatible with gate map " +
                         shape_str(params.w_gate.shape()));
  }
  return activation(split_heads(matmul(x, params.w_gate), params.heads), params.gate_activation);
}

Tensor pg_ffn(const Tensor& heads, const Tensor& gates, const PGFFNParams& params, HiddenProbe* probe,
              double hidden_dropout, Rng* rng) {
  if (heads.shape() != gates.shape()) {
    throw DimensionError("pg_ffn: heads " + shape_str(heads.shape()) + " and gates " + shape_str(gates.shape()) +
                         " differ");
  }
  if (heads.rank() != 3) throw DimensionError("pg_ffn: expected [H x T x d_k], got " + shape_str(heads.shape()));
  HiddenProbe head_major;
  Tensor ffn_out = small_ffn(heads, params, probe ? &head_major : nullptr, hidden_dropout, rng);
  if (probe) {
    // Rows arrive as (head, token); regroup so each token carries all heads.
    const std::size_t h = heads.dim(0), t = heads.dim(1), w = head_major.width;
    probe->tokens = t;
    probe->width = h * w;
    probe->values.assign(t * h * w, 0.0);
    for (std::size_t hi = 0; hi < h; ++hi)
      for (std::size_t ti = 0; ti < t; ++ti)
        std::copy_n(head_major.values.data() + (hi * t + ti) * w, w, probe->values.data() + ti * h * w + hi * w);
  }
  return mul(gates, ffn_out);
}

Tensor fuse_heads(const Tensor& o, const Tensor& w_o) {
  if (o.rank() != 3 || w_o.rank() != 2 || o.dim(0) * o.dim(2) != w_o.dim(0)) {
    throw DimensionError("fuse_heads: outputs " + shape_str(o.shape()) + " incompatible with W_O " +
                         shape_str(w_o.shape()));
  }
  // Concatenating heads then one matmul equals the per-head block sum.
  return matmul(merge_heads(o), w_o);
}

}  // namespace pf
