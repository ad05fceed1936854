// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Model fixtures shared by the unit and acceptance suites.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "partialformer/model.hpp"
#include "partialformer/rng.hpp"

namespace fixtures {

inline pf::ModelConfig tiny(pf::Architecture arch, std::uint64_t seed = 1) {
  pf::ModelConfig c;
  c.arch = arch;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.model_dim = 8;
  c.head_dim = 4;
  c.encoder_heads = arch == pf::Architecture::partialformer ? 3 : 2;
  c.decoder_heads = 2;
  c.vocab_size = 11;
  c.max_len = 16;
  c.dropout = c.attention_dropout = c.relu_dropout = 0.0;
  c.seed = seed;
  return c;
}

// Overwrites every parameter with scaled normals so biases, gains and A_G are
// all exercised.
inline void randomize(pf::Model& m, pf::Rng& rng, double scale = 0.5) {
  for (const auto& e : m.registry.entries()) {
    const bool gain = e.path.ends_with(".gain");
    oracle::fill(e.tensor, [&](std::size_t) { return (gain ? 1.0 : 0.0) + scale * rng.normal(); });
  }
}

inline void zero_where(pf::Model& m, const std::string& fragment) {
  for (const auto& e : m.registry.entries())
    if (e.path.find(fragment) != std::string::npos) oracle::zero(e.tensor);
}

// Copies every parameter of src whose path and shape also exist in dst.
inline std::size_t copy_matching(pf::Model& dst, const pf::Model& src) {
  std::size_t copied = 0;
  for (const auto& e : dst.registry.entries()) {
    const pf::Tensor* s = src.registry.find(e.path);
    if (!s || s->shape() != e.tensor.shape()) continue;
    oracle::fill(e.tensor, [&](std::size_t i) { return s->data()[i]; });
    ++copied;
  }
  return copied;
}

// Shared FFN with W1 = [I, -I, 0], W2 = [I; -I; 0] and zero biases, so
// relu(x) - relu(-x) = x passes every head through unchanged.
inline void identity_pgffn(pf::Model& m) {
  for (auto* stack : {&m.encoder, &m.decoder})
    for (auto& layer : *stack)
      for (auto& sub : layer.sublayers) {
        if (sub.kind != pf::SublayerKind::unified) continue;
        const std::size_t dk = sub.pgffn.head_dim(), hid = sub.pgffn.hidden_dim();
        oracle::fill(sub.pgffn.w1, [&](std::size_t i) {
          const std::size_t r = i / hid, c = i % hid;
          return c == r ? 1.0 : (c == dk + r ? -1.0 : 0.0);
        });
        oracle::fill(sub.pgffn.w2, [&](std::size_t i) {
          const std::size_t r = i / dk, c = i % dk;
          return r == c ? 1.0 : (r == dk + c ? -1.0 : 0.0);
        });
        oracle::zero(sub.pgffn.b1);
        oracle::zero(sub.pgffn.b2);
      }
}

inline std::vector<int> random_tokens(pf::Rng& rng, std::size_t len, std::size_t vocab, int lo = 0) {
  std::vector<int> ids(len);
  for (int& id : ids) id = lo + static_cast<int>(rng.below(vocab - static_cast<std::size_t>(lo)));
  return ids;
}

}  // namespace fixtures
