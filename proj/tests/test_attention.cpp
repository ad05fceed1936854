// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "partialformer/attention.hpp"
#include "partialformer/errors.hpp"

namespace {

using pf::Tensor;

pf::AttentionBundle random_bundle(pf::Rng& rng, const pf::HeadSpec& spec, bool grad = false) {
  pf::AttentionBundle b;
  const std::size_t qk = spec.inter_heads * spec.head_dim, v = spec.heads * spec.head_dim;
  b.w_q = oracle::random_tensor(rng, {spec.model_dim, qk}, grad, 0.5);
  b.w_k = oracle::random_tensor(rng, {spec.model_dim, qk}, grad, 0.5);
  b.w_v = oracle::random_tensor(rng, {spec.model_dim, v}, grad, 0.5);
  b.w_o = oracle::random_tensor(rng, {v, spec.model_dim}, grad, 0.5);
  if (spec.head_scaling()) {
    const std::size_t mid = spec.expansion_hidden();
    b.expansion = pf::HeadExpansionParams{oracle::random_tensor(rng, {spec.inter_heads, mid}, grad),
                                          oracle::random_tensor(rng, {mid}, grad),
                                          oracle::random_tensor(rng, {mid, spec.heads}, grad),
                                          oracle::random_tensor(rng, {spec.heads}, grad)};
  }
  return b;
}

std::vector<oracle::Mat> per_head(const Tensor& t) {
  const std::size_t h = t.dim(0), r = t.dim(1), c = t.dim(2);
  std::vector<oracle::Mat> out(h, oracle::Mat(r, c));
  for (std::size_t i = 0; i < h; ++i) std::copy_n(t.data().begin() + i * r * c, r * c, out[i].v.begin());
  return out;
}

std::vector<double> flatten(const std::vector<oracle::Mat>& heads) {
  std::vector<double> out;
  for (const auto& m : heads) out.insert(out.end(), m.v.begin(), m.v.end());
  return out;
}

TEST(HeadSpecTest, HeadScalingSwitch) {
  EXPECT_FALSE(pf::HeadSpec::for_heads(8, 64, 512).head_scaling());
  const auto hs = pf::HeadSpec::for_heads(24, 64, 512);
  EXPECT_TRUE(hs.head_scaling());
  EXPECT_EQ(hs.inter_heads, 8u);
  EXPECT_EQ(pf::HeadSpec::for_heads(30, 45, 360).inter_heads, 8u);
  EXPECT_THROW(pf::HeadSpec::for_heads(4, 7, 64), pf::ConfigError);
}

TEST(ProjectQkvTest, BaseShapes) {
  pf::Rng rng(1);
  const auto spec = pf::HeadSpec::for_heads(8, 64, 512);
  const auto b = random_bundle(rng, spec);
  Tensor x = oracle::random_tensor(rng, {5, 512});
  const auto qkv = pf::project_qkv(x, x, b, spec);
  EXPECT_EQ(qkv.q.shape(), (pf::Shape{8, 5, 64}));
  EXPECT_EQ(qkv.k.shape(), (pf::Shape{8, 5, 64}));
  EXPECT_EQ(qkv.v.shape(), (pf::Shape{8, 5, 64}));
}

TEST(ProjectQkvTest, HeadScaledShapes) {
  pf::Rng rng(2);
  const auto spec = pf::HeadSpec::for_heads(24, 64, 512);
  const auto b = random_bundle(rng, spec);
  Tensor x = oracle::random_tensor(rng, {3, 512});
  const auto qkv = pf::project_qkv(x, x, b, spec);
  EXPECT_EQ(qkv.q.dim(0), 8u);
  EXPECT_EQ(qkv.k.dim(0), 8u);
  EXPECT_EQ(qkv.v.dim(0), 24u);
}

TEST(ProjectQkvTest, ZeroInputGivesZeros) {
  pf::Rng rng(3);
  const auto spec = pf::HeadSpec::for_heads(2, 4, 8);
  const auto qkv = pf::project_qkv(Tensor::zeros({3, 8}), Tensor::zeros({3, 8}), random_bundle(rng, spec), spec);
  for (const Tensor* t : {&qkv.q, &qkv.k, &qkv.v})
    for (double v : t->data()) EXPECT_EQ(v, 0.0);
}

TEST(ProjectQkvTest, WidthMismatchRejected) {
  pf::Rng rng(4);
  const auto spec = pf::HeadSpec::for_heads(2, 4, 8);
  EXPECT_THROW(pf::project_qkv(Tensor::zeros({3, 7}), Tensor::zeros({3, 7}), random_bundle(rng, spec), spec),
               pf::DimensionError);
}

TEST(AttentionLogitsTest, ZeroInputs) {
  Tensor s = pf::attention_logits(Tensor::zeros({2, 3, 4}), Tensor::zeros({2, 5, 4}), 4);
  EXPECT_EQ(s.shape(), (pf::Shape{2, 3, 5}));
  for (double v : s.data()) EXPECT_EQ(v, 0.0);
}

TEST(AttentionLogitsTest, HandArithmetic) {
  Tensor q = Tensor::from_data({1, 1, 2}, {1, 0});
  Tensor k = Tensor::from_data({1, 2, 2}, {1, 0, 0, 1});
  Tensor s = pf::attention_logits(q, k, 4);
  EXPECT_DOUBLE_EQ(s.data()[0], 0.5);
  EXPECT_DOUBLE_EQ(s.data()[1], 0.0);
}

TEST(AttentionLogitsTest, MatchesLoopOracleAndAppliesMask) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    pf::Rng rng(seed);
    Tensor q = oracle::random_tensor(rng, {3, 4, 5}), k = oracle::random_tensor(rng, {3, 4, 5});
    Tensor mask = pf::causal_mask(4, 4);
    Tensor s = pf::attention_logits(q, k, 5, &mask);
    for (std::size_t h = 0; h < 3; ++h)
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
          double dot = 0.0;
          for (std::size_t c = 0; c < 5; ++c) dot += q.at({h, i, c}) * k.at({h, j, c});
          if (j > i) EXPECT_EQ(s.at({h, i, j}), pf::kMaskSentinel);
          else EXPECT_NEAR(s.at({h, i, j}), dot / std::sqrt(5.0), 1e-12);
        }
  }
}

TEST(ExpandHeadsTest, InactiveSpecRejected) {
  pf::Rng rng(5);
  const auto spec = pf::HeadSpec::for_heads(2, 4, 8);
  pf::HeadExpansionParams mlp{Tensor::zeros({2, 4}), Tensor::zeros({4}), Tensor::zeros({4, 2}), Tensor::zeros({2})};
  EXPECT_THROW(pf::expand_heads(Tensor::zeros({2, 3, 3}), mlp, spec), pf::UsageError);
}

TEST(ExpandHeadsTest, IdentityConfigurationReproducesInput) {
  // relu(s) - relu(-s) = s through a 2H-wide hidden layer.
  const pf::HeadSpec spec{2, 2, 3, 8};
  ASSERT_TRUE(spec.head_scaling());
  std::vector<double> w1(2 * 4, 0.0), w2(4 * 2, 0.0);
  for (std::size_t h = 0; h < 2; ++h) {
    w1[h * 4 + h] = 1.0;
    w1[h * 4 + 2 + h] = -1.0;
    w2[h * 2 + h] = 1.0;
    w2[(2 + h) * 2 + h] = -1.0;
  }
  pf::HeadExpansionParams mlp{Tensor::from_data({2, 4}, w1), Tensor::zeros({4}), Tensor::from_data({4, 2}, w2),
                              Tensor::zeros({2})};
  pf::Rng rng(6);
  Tensor s = oracle::random_tensor(rng, {2, 3, 4});
  EXPECT_LT(oracle::max_abs_diff(oracle::vec(pf::expand_heads(s, mlp, spec)), oracle::vec(s)), 1e-15);
}

TEST(ExpandHeadsTest, ConstantGridStaysConstant) {
  pf::Rng rng(7);
  const pf::HeadSpec spec{3, 2, 2, 4};
  const auto b = random_bundle(rng, spec);
  std::vector<double> vals;
  for (std::size_t h = 0; h < 2; ++h)
    for (int k = 0; k < 12; ++k) vals.push_back(h == 0 ? 0.7 : -1.3);
  Tensor out = pf::expand_heads(Tensor::from_data({2, 3, 4}, vals), *b.expansion, spec);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t p = 1; p < 12; ++p) EXPECT_EQ(out.data()[h * 12 + p], out.data()[h * 12]);
}

TEST(ExpandHeadsTest, MatchesPerPositionOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    pf::Rng rng(seed);
    const pf::HeadSpec spec{3, 2, 2, 4};
    const auto b = random_bundle(rng, spec);
    Tensor s = oracle::random_tensor(rng, {2, 4, 5});
    const auto want = oracle::expand(per_head(s), *b.expansion);
    EXPECT_LT(oracle::max_abs_diff(oracle::vec(pf::expand_heads(s, *b.expansion, spec)), flatten(want)), 1e-12);
  }
}

TEST(ExpandHeadsTest, PositionPermutationCommutes) {
  pf::Rng rng(8);
  const pf::HeadSpec spec{5, 3, 2, 6};
  const auto b = random_bundle(rng, spec);
  const std::size_t tq = 4, tk = 3, cells = tq * tk;
  Tensor s = oracle::random_tensor(rng, {3, tq, tk});
  std::vector<std::size_t> perm(cells);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = cells - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  std::vector<double> permuted(s.numel());
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t c = 0; c < cells; ++c) permuted[h * cells + c] = s.data()[h * cells + perm[c]];
  Tensor out = pf::expand_heads(s, *b.expansion, spec);
  Tensor out_p = pf::expand_heads(Tensor::from_data({3, tq, tk}, permuted), *b.expansion, spec);
  std::vector<double> restored(out.numel());
  for (std::size_t h = 0; h < 5; ++h)
    for (std::size_t c = 0; c < cells; ++c) restored[h * cells + perm[c]] = out_p.data()[h * cells + c];
  EXPECT_EQ(restored, oracle::vec(out));
}

TEST(GlobalLogitsTest, ZeroParamsGiveZeroLogits) {
  pf::Rng rng(9);
  const auto spec = pf::HeadSpec::for_heads(2, 4, 8);
  Tensor e = oracle::random_tensor(rng, {5, 8});
  pf::GlobalLogitParams p{Tensor::zeros({8, 8}), Tensor::zeros({8, 8})};
  const auto g = pf::compute_global_logits(e, e, p, spec, pf::AttentionSite::encoder_self);
  EXPECT_EQ(g.logits.shape(), (pf::Shape{2, 5, 5}));
  for (double v : g.logits.data()) EXPECT_EQ(v, 0.0);
}

TEST(GlobalLogitsTest, EncoderUnmaskedDecoderCausal) {
  pf::Rng rng(10);
  const auto spec = pf::HeadSpec::for_heads(3, 4, 8);
  pf::GlobalLogitParams p{oracle::random_tensor(rng, {8, 12}), oracle::random_tensor(rng, {8, 12})};
  Tensor e = oracle::random_tensor(rng, {5, 8});
  const auto enc = pf::compute_global_logits(e, e, p, spec, pf::AttentionSite::encoder_self);
  for (double v : enc.logits.data()) EXPECT_GT(v, pf::kMaskedThreshold);
  Tensor d = oracle::random_tensor(rng, {4, 8});
  Tensor mask = pf::causal_mask(4, 4);
  const auto dec = pf::compute_global_logits(d, d, p, spec, pf::AttentionSite::decoder_self, &mask);
  EXPECT_EQ(dec.site, pf::AttentionSite::decoder_self);
  for (std::size_t h = 0; h < 3; ++h)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        if (j > i) EXPECT_EQ(dec.logits.at({h, i, j}), pf::kMaskSentinel);
        else EXPECT_GT(dec.logits.at({h, i, j}), pf::kMaskedThreshold);
      }
}

TEST(GlobalLogitsTest, HeadsProducedDirectlyAndCounted) {
  pf::Rng rng(11);
  const auto spec = pf::HeadSpec::for_heads(6, 4, 8);
  pf::GlobalLogitParams p{oracle::random_tensor(rng, {8, 24}), oracle::random_tensor(rng, {8, 24})};
  Tensor q = oracle::random_tensor(rng, {3, 8}), k = oracle::random_tensor(rng, {5, 8});
  const std::size_t before = pf::global_logits_compute_count();
  const auto g = pf::compute_global_logits(q, k, p, spec, pf::AttentionSite::cross);
  EXPECT_EQ(pf::global_logits_compute_count(), before + 1);
  const auto want = oracle::logits(oracle::from(q), oracle::from(k), p.w_q, p.w_k, 6, 4);
  EXPECT_LT(oracle::max_abs_diff(oracle::vec(g.logits), flatten(want)), 1e-12);
}

TEST(AttendTest, UniformLogitsAverageUnmaskedValues) {
  pf::Rng rng(12);
  Tensor v = oracle::random_tensor(rng, {2, 4, 3});
  Tensor mask = pf::causal_mask(4, 4);
  Tensor heads = pf::attend(Tensor::zeros({2, 4, 4}), nullptr, v, {.mask = &mask});
  for (std::size_t h = 0; h < 2; ++h)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 3; ++c) {
        double m = 0.0;
        for (std::size_t j = 0; j <= i; ++j) m += v.at({h, j, c});
        EXPECT_NEAR(heads.at({h, i, c}), m / static_cast<double>(i + 1), 1e-12);
      }
}

TEST(AttendTest, MatchesCompositionOracleWithGlobalLogits) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    pf::Rng rng(seed);
    Tensor s = oracle::random_tensor(rng, {3, 4, 5}), v = oracle::random_tensor(rng, {3, 5, 2});
    pf::GlobalLogits g{pf::AttentionSite::cross, oracle::random_tensor(rng, {3, 4, 5})};
    Tensor probs;
    Tensor heads = pf::attend(s, &g, v, {.probs_out = &probs});
    const auto sh = per_head(s), gh = per_head(g.logits), vh = per_head(v);
    std::vector<oracle::Mat> want;
    for (std::size_t h = 0; h < 3; ++h) {
      const oracle::Mat a = oracle::softmax(oracle::add(sh[h], gh[h]));
      oracle::Mat out(4, 2);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t c = 0; c < 2; ++c)
          for (std::size_t j = 0; j < 5; ++j) out(i, c) += a(i, j) * vh[h](j, c);
      want.push_back(out);
    }
    EXPECT_LT(oracle::max_abs_diff(oracle::vec(heads), flatten(want)), 1e-12);
    for (std::size_t r = 0; r < 12; ++r) {
      double total = 0.0;
      for (std::size_t j = 0; j < 5; ++j) total += probs.data()[r * 5 + j];
      EXPECT_NEAR(total, 1.0, 1e-9);
    }
  }
}

TEST(AttendTest, ReducesToVanillaMhsaWithoutScalingOrGlobal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    pf::Rng rng(seed);
    const auto spec = pf::HeadSpec::for_heads(2, 3, 6);
    const auto b = random_bundle(rng, spec);
    Tensor x = oracle::random_tensor(rng, {4, 6});
    const auto qkv = pf::project_qkv(x, x, b, spec);
    pf::GlobalLogits zero{pf::AttentionSite::encoder_self, Tensor::zeros({2, 4, 4})};
    Tensor heads = pf::attend(pf::attention_logits(qkv.q, qkv.k, 3), &zero, qkv.v);
    Tensor y = pf::add(x, pf::matmul(pf::merge_heads(heads), b.w_o));
    // Scripted MHSA on the raw input (no pre-norm at this level).
    const oracle::Mat xm = oracle::from(x);
    const auto s = oracle::logits(xm, xm, b.w_q, b.w_k, 2, 3);
    const oracle::Mat vm = oracle::matmul(xm, oracle::from(b.w_v)), wo = oracle::from(b.w_o);
    oracle::Mat want = xm;
    for (std::size_t h = 0; h < 2; ++h) {
      const oracle::Mat hd = oracle::matmul(oracle::softmax(s[h]), oracle::cols(vm, h * 3, 3));
      want = oracle::add(want, oracle::matmul(hd, oracle::rows(wo, h * 3, 3)));
    }
    EXPECT_LT(oracle::max_abs_diff(oracle::vec(y), want.v), 1e-12);
  }
}

TEST(AttendTest, CausalPerturbationDoesNotLeakBackwards) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    pf::Rng rng(seed);
    const auto spec = pf::HeadSpec::for_heads(2, 2, 4);
    const auto b = random_bundle(rng, spec);
    const std::size_t t = 2 + rng.below(5), j = rng.below(t);
    Tensor x = oracle::random_tensor(rng, {t, 4});
    std::vector<double> xp = oracle::vec(x);
    for (std::size_t c = 0; c < 4; ++c) xp[j * 4 + c] += 1.0 + rng.normal();
    Tensor mask = pf::causal_mask(t, t);
    auto run = [&](const Tensor& in) {
      const auto qkv = pf::project_qkv(in, in, b, spec);
      return oracle::vec(pf::attend(pf::attention_logits(qkv.q, qkv.k, 2), nullptr, qkv.v, {.mask = &mask}));
    };
    const auto base = run(x), pert = run(Tensor::from_data({t, 4}, xp));
    for (std::size_t h = 0; h < 2; ++h)
      for (std::size_t i = 0; i < j; ++i)
        for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(base[(h * t + i) * 2 + c], pert[(h * t + i) * 2 + c]);
  }
}

TEST(AttentionGradTest, FiniteDifferences100Seeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    pf::Rng rng(seed + 1000);
    const pf::HeadSpec spec{3, 2, 2, 4};
    const auto b = random_bundle(rng, spec, true);
    pf::GlobalLogitParams gp{oracle::random_tensor(rng, {4, 6}, true, 0.5), oracle::random_tensor(rng, {4, 6}, true, 0.5)};
    const std::size_t t = 1 + rng.below(4);
    Tensor x = oracle::random_tensor(rng, {t, 4}, true);
    Tensor mask = pf::causal_mask(t, t);
    Tensor w = oracle::random_tensor(rng, {3, t, 2});
    auto f = [&] {
      const auto qkv = pf::project_qkv(x, x, b, spec);
      Tensor s = pf::expand_heads(pf::attention_logits(qkv.q, qkv.k, 2), *b.expansion, spec);
      const auto g = pf::compute_global_logits(x, x, gp, spec, pf::AttentionSite::decoder_self, &mask);
      return gradcheck::project(pf::attend(s, &g, qkv.v, {.mask = &mask}), w);
    };
    const auto r = gradcheck::check(f, {{"x", x},
                                        {"w_q", b.w_q},
                                        {"w_k", b.w_k},
                                        {"w_v", b.w_v},
                                        {"mlp.w1", b.expansion->w1},
                                        {"mlp.b1", b.expansion->b1},
                                        {"mlp.w2", b.expansion->w2},
                                        {"mlp.b2", b.expansion->b2},
                                        {"g.w_q", gp.w_q},
                                        {"g.w_k", gp.w_k}});
    ASSERT_LT(r.max_rel_error, 1e-4) << "seed " << seed << " at " << r.worst << " fallbacks " << r.kink_fallbacks
                                      << " unresolved " << r.unresolved;
  }
}

}  // namespace
