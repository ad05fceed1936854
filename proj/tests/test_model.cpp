// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "fixtures.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"
#include "partialformer/analysis.hpp"
#include "partialformer/errors.hpp"
#include "partialformer/model.hpp"
#include "partialformer/training.hpp"

namespace {

using pf::Architecture;
using pf::Tensor;

constexpr Architecture kArchs[] = {Architecture::vanilla, Architecture::partialformer, Architecture::vanilla_pgffn};

pf::ModelConfig budget_config(Architecture arch, std::size_t n, std::size_t d, std::size_t dk, std::size_t he,
                      std::size_t hd) {
  pf::ModelConfig c;
  c.arch = arch;
  c.encoder_layers = n;
  c.decoder_layers = 6;
  c.model_dim = d;
  c.head_dim = dk;
  c.encoder_heads = he;
  c.decoder_heads = hd;
  return c;
}

double millions(const pf::ModelConfig& c) { return static_cast<double>(pf::count_params(c).total) / 1e6; }

TEST(ModelConfigTest, ValidationNamesTheField) {
  auto expect_field = [](pf::ModelConfig c, const std::string& field) {
    try {
      c.validate();
      ADD_FAILURE() << "expected ConfigError for " << field;
    } catch (const pf::ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  auto c = fixtures::tiny(Architecture::partialformer);
  c.encoder_layers = 0;
  expect_field(c, "N");
  c = fixtures::tiny(Architecture::vanilla);
  c.encoder_heads = 3;
  expect_field(c, "H_enc");
  c = fixtures::tiny(Architecture::partialformer);
  c.head_dim = 3;
  expect_field(c, "d_k");
  c = fixtures::tiny(Architecture::partialformer);
  c.vocab_size = 3;
  expect_field(c, "vocab_size");
  c = fixtures::tiny(Architecture::partialformer);
  c.dropout = 1.0;
  expect_field(c, "dropout");
}

TEST(ModelConfigTest, PartialformerHeadsAreFree) {
  auto c = fixtures::tiny(Architecture::partialformer);
  c.encoder_heads = 7;
  c.decoder_heads = 1;
  EXPECT_NO_THROW(c.validate());
  EXPECT_TRUE(c.encoder_spec().head_scaling());
  EXPECT_EQ(c.encoder_spec().inter_heads, 2u);
}

TEST(BuildModelTest, ReferenceBudgets) {
  EXPECT_NEAR(millions(budget_config(Architecture::vanilla, 6, 512, 64, 8, 8)), 62.0, 62.0 * 0.03);
  EXPECT_NEAR(millions(budget_config(Architecture::partialformer, 6, 512, 64, 8, 8)), 42.0, 42.0 * 0.03);
  EXPECT_NEAR(millions(budget_config(Architecture::partialformer, 24, 360, 45, 30, 16)), 68.0, 68.0 * 0.03);
  EXPECT_NEAR(millions(budget_config(Architecture::vanilla_pgffn, 6, 512, 64, 8, 8)), 40.0, 40.0 * 0.03);
  auto reduced = budget_config(Architecture::vanilla, 6, 512, 64, 8, 8);
  reduced.ffn_dim = 384;
  EXPECT_NEAR(millions(reduced), 41.0, 41.0 * 0.03);
}

TEST(BuildModelTest, VanillaFfnIsFourD) {
  const auto c = budget_config(Architecture::vanilla, 6, 512, 64, 8, 8);
  EXPECT_EQ(c.effective_ffn_dim(), 2048u);
  const auto dims = pf::ffn_hidden_dims(c);
  EXPECT_EQ(dims.front(), 2048u);
}

TEST(BuildModelTest, RegistryMatchesClosedForm50RandomConfigs) {
  pf::Rng rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    pf::ModelConfig c;
    c.arch = kArchs[trial % 3];
    c.encoder_layers = 1 + rng.below(3);
    c.decoder_layers = rng.below(3);
    c.head_dim = 1 + rng.below(4);
    const std::size_t h_int = 1 + rng.below(4);
    c.model_dim = c.head_dim * h_int;
    if (c.arch == Architecture::partialformer) {
      c.encoder_heads = 1 + rng.below(6);
      c.decoder_heads = 1 + rng.below(6);
    } else {
      c.encoder_heads = c.decoder_heads = h_int;
    }
    c.encoder_ffn_ratio = 2 + rng.below(3);
    c.decoder_ffn_ratio = 1 + rng.below(3);
    c.ffn_dim = rng.below(2) ? 0 : 1 + rng.below(20);
    c.vocab_size = 5 + rng.below(20);
    c.share_embeddings = rng.below(2) == 0;
    c.max_len = 8;
    c.seed = rng.next_u64();
    const pf::Model m = pf::build_model(c);
    const auto counted = pf::count_params(c);
    EXPECT_EQ(m.registry.total_numel(), counted.total) << "trial " << trial << " arch " << pf::to_string(c.arch);
    std::uint64_t parts = 0;
    for (const auto& e : counted.modules) parts += e.count;
    EXPECT_EQ(parts, counted.total);
  }
}

TEST(BuildModelTest, PathsUniqueAndInitRules) {
  const pf::Model m = pf::build_model(fixtures::tiny(Architecture::partialformer));
  std::set<std::string> paths;
  for (const auto& e : m.registry.entries()) {
    EXPECT_TRUE(paths.insert(e.path).second) << e.path;
    const auto v = e.tensor.data();
    if (e.path.ends_with(".gain")) {
      for (double x : v) EXPECT_EQ(x, 1.0) << e.path;
    } else if (e.path.ends_with(".bias") || e.path.ends_with(".b1") || e.path.ends_with(".b2")) {
      for (double x : v) EXPECT_EQ(x, 0.0) << e.path;
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(e.tensor.dim(0) + e.tensor.dim(1)));
      for (double x : v) EXPECT_LE(std::fabs(x), limit) << e.path;
    }
  }
  EXPECT_TRUE(paths.count("global.encoder_self.w_q"));
  EXPECT_TRUE(paths.count("global.decoder_self.w_k"));
  EXPECT_TRUE(paths.count("global.cross.w_q"));
  EXPECT_TRUE(paths.count("embed.tokens"));
  EXPECT_TRUE(paths.count("encoder.layers.0.self.attn.expand.w1"));
  EXPECT_FALSE(paths.count("decoder.layers.0.self.attn.expand.w1"));
}

TEST(BuildModelTest, DuplicatePathRejected) {
  pf::ParameterRegistry r;
  r.add("a", Tensor::zeros({1}));
  EXPECT_THROW(r.add("a", Tensor::zeros({1})), pf::UsageError);
}

TEST(BuildModelTest, SameSeedSameParameters) {
  const auto c = fixtures::tiny(Architecture::partialformer, 5);
  const pf::Model a = pf::build_model(c), b = pf::build_model(c);
  for (std::size_t i = 0; i < a.registry.size(); ++i)
    EXPECT_EQ(oracle::vec(a.registry.entries()[i].tensor), oracle::vec(b.registry.entries()[i].tensor));
}

TEST(UnifiedSublayerTest, ZeroParametersGiveResidualIdentity) {
  for (Architecture arch : kArchs) {
    pf::Model m = pf::build_model(fixtures::tiny(arch));
    for (const auto& e : m.registry.entries())
      if (!e.path.starts_with("embed") && !e.path.starts_with("output")) oracle::zero(e.tensor);
    pf::Rng rng(3);
    Tensor x = oracle::random_tensor(rng, {4, 8});
    for (const auto& sub : m.encoder[0].sublayers) {
      Tensor y;
      if (sub.kind == pf::SublayerKind::unified) {
        pf::GlobalLogits g{pf::AttentionSite::encoder_self, Tensor::zeros({sub.spec.heads, 4, 4})};
        y = pf::unified_sublayer(x, nullptr, &g, sub, nullptr, {}, nullptr);
      } else if (sub.kind == pf::SublayerKind::attention) {
        y = pf::attention_sublayer(x, nullptr, sub, nullptr, {}, nullptr);
      } else {
        y = pf::feed_forward_sublayer(x, sub, {}, nullptr);
      }
      EXPECT_EQ(oracle::vec(y), oracle::vec(x)) << pf::to_string(arch);
    }
  }
}

TEST(UnifiedSublayerTest, MatchesScriptedOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto c = fixtures::tiny(Architecture::partialformer, seed);
    static const pf::Activation kinds[] = {pf::Activation::relu, pf::Activation::sigmoid, pf::Activation::tanh};
    c.gate_activation = kinds[seed % 3];
    c.encoder_heads = 1 + seed % 5;
    pf::Model m = pf::build_model(c);
    pf::Rng rng(seed + 100);
    fixtures::randomize(m, rng);
    const auto& sub = m.encoder[0].sublayers[0];
    Tensor x = oracle::random_tensor(rng, {5, 8});
    Tensor gl = oracle::random_tensor(rng, {sub.spec.heads, 5, 5});
    pf::GlobalLogits g{pf::AttentionSite::encoder_self, gl};
    Tensor y = pf::unified_sublayer(x, nullptr, &g, sub, nullptr, {}, nullptr);
    std::vector<oracle::Mat> per(sub.spec.heads, oracle::Mat(5, 5));
    for (std::size_t h = 0; h < sub.spec.heads; ++h) std::copy_n(gl.data().begin() + h * 25, 25, per[h].v.begin());
    const oracle::Mat want = oracle::unified(oracle::from(x), nullptr, {&sub, &per, nullptr, false});
    EXPECT_LT(oracle::max_abs_diff(oracle::vec(y), want.v), 1e-10) << "seed " << seed;
  }
}

TEST(UnifiedSublayerTest, RejectsMissingOrWrongSiteGlobal) {
  const pf::Model m = pf::build_model(fixtures::tiny(Architecture::partialformer));
  const auto& sub = m.encoder[0].sublayers[0];
  Tensor x = Tensor::zeros({3, 8});
  EXPECT_THROW(pf::unified_sublayer(x, nullptr, nullptr, sub, nullptr, {}, nullptr), pf::UsageError);
  pf::GlobalLogits g{pf::AttentionSite::cross, Tensor::zeros({3, 3, 3})};
  EXPECT_THROW(pf::unified_sublayer(x, nullptr, &g, sub, nullptr, {}, nullptr), pf::UsageError);
}

TEST(UnifiedSublayerTest, ZeroFfnCollapsesUnifiedSublayerToIdentity) {
  // With O = G * FFN(head) and the FFN zeroed, nothing reaches W_O.
  auto c = fixtures::tiny(Architecture::partialformer);
  c.encoder_heads = 2;
  c.gate_activation = pf::Activation::identity;
  pf::Model m = pf::build_model(c);
  pf::Rng rng(8);
  fixtures::randomize(m, rng);
  fixtures::zero_where(m, ".pgffn.w1");
  fixtures::zero_where(m, ".pgffn.b1");
  fixtures::zero_where(m, ".pgffn.w2");
  fixtures::zero_where(m, ".pgffn.b2");
  const auto& sub = m.encoder[0].sublayers[0];
  ASSERT_FALSE(sub.spec.head_scaling());
  Tensor x = oracle::random_tensor(rng, {4, 8});
  pf::ForwardOptions open;
  open.gate_mode = pf::GateMode::open;
  pf::GlobalLogits zero{pf::AttentionSite::encoder_self, Tensor::zeros({2, 4, 4})};
  Tensor y = pf::unified_sublayer(x, nullptr, &zero, sub, nullptr, open, nullptr);
  EXPECT_EQ(oracle::vec(y), oracle::vec(x));
}

TEST(UnifiedSublayerTest, IdentityFfnPointEqualsVanillaAttention) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto c = fixtures::tiny(Architecture::partialformer, seed);
    c.encoder_heads = 2;
    c.gate_activation = pf::Activation::identity;
    pf::Model m = pf::build_model(c);
    pf::Rng rng(seed);
    fixtures::randomize(m, rng);
    fixtures::identity_pgffn(m);
    const auto& sub = m.encoder[0].sublayers[0];
    Tensor x = oracle::random_tensor(rng, {4, 8});
    pf::ForwardOptions open;
    open.gate_mode = pf::GateMode::open;
    pf::GlobalLogits zero{pf::AttentionSite::encoder_self, Tensor::zeros({2, 4, 4})};
    Tensor y = pf::unified_sublayer(x, nullptr, &zero, sub, nullptr, open, nullptr);
    Tensor v = pf::attention_sublayer(x, nullptr, sub, nullptr, {}, nullptr);
    EXPECT_LT(oracle::max_abs_diff(oracle::vec(y), oracle::vec(v)), 1e-12);
  }
}

TEST(ForwardTest, EveryArchitectureMatchesScriptedOracle) {
  for (Architecture arch : kArchs) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto c = fixtures::tiny(arch, seed);
      c.share_embeddings = seed % 2 == 0;
      if (arch == Architecture::partialformer) c.encoder_heads = 1 + seed % 4;
      pf::Model m = pf::build_model(c);
      pf::Rng rng(seed + 7);
      fixtures::randomize(m, rng, 0.4);
      const auto src = fixtures::random_tokens(rng, 2 + rng.below(5), c.vocab_size);
      const auto tgt = fixtures::random_tokens(rng, 1 + rng.below(5), c.vocab_size);
      Tensor logits = pf::forward(m, src, tgt);
      ASSERT_EQ(logits.shape(), (pf::Shape{tgt.size(), c.vocab_size}));
      const oracle::Mat want = oracle::forward(m, src, tgt);
      EXPECT_LT(oracle::max_abs_diff(oracle::vec(logits), want.v), 1e-10)
          << pf::to_string(arch) << " seed " << seed;
    }
  }
}

TEST(ForwardTest, ArchitectureCheckedEntryPoints) {
  const pf::Model v = pf::build_model(fixtures::tiny(Architecture::vanilla));
  const pf::Model p = pf::build_model(fixtures::tiny(Architecture::partialformer));
  const std::vector<int> s = {4, 5}, t = {1, 6};
  EXPECT_NO_THROW(pf::vanilla_forward(v, s, t));
  EXPECT_THROW(pf::vanilla_forward(p, s, t), pf::UsageError);
  EXPECT_THROW(pf::vanilla_pgffn_forward(v, s, t), pf::UsageError);
}

TEST(EncoderTest, SingleTokenAttentionIsOne) {
  pf::Model m = pf::build_model(fixtures::tiny(Architecture::partialformer));
  pf::ForwardTrace trace;
  const std::vector<int> src = {7};
  pf::encoder_forward(m, src, {.trace = &trace});
  for (const auto& layer : trace.encoder)
    for (const auto& sub : layer.sublayers)
      for (double p : sub.attention_probs.data()) EXPECT_EQ(p, 1.0);
}

TEST(EncoderTest, PermutationEquivariantWithoutPositions) {
  for (Architecture arch : kArchs) {
    auto c = fixtures::tiny(arch);
    c.positional_encoding = false;
    pf::Model m = pf::build_model(c);
    pf::Rng rng(21);
    fixtures::randomize(m, rng);
    const std::vector<int> src = {4, 9, 5, 7, 6};
    const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    std::vector<int> permuted;
    for (std::size_t i : perm) permuted.push_back(src[i]);
    const auto a = pf::encoder_forward(m, src), b = pf::encoder_forward(m, permuted);
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = 0; j < 8; ++j)
        EXPECT_NEAR(b.output.at({i, j}), a.output.at({perm[i], j}), 1e-12) << pf::to_string(arch);
  }
}

TEST(EncoderTest, RetainsOneStatePerLayer) {
  auto c = fixtures::tiny(Architecture::partialformer);
  c.encoder_layers = 24;
  c.decoder_layers = 3;
  const pf::Model m = pf::build_model(c);
  const std::vector<int> src = {4, 5, 6};
  pf::ForwardTrace trace;
  const auto out = pf::encoder_forward(m, src, {.trace = &trace});
  EXPECT_EQ(out.states.size(), 24u);
  EXPECT_EQ(trace.encoder.size(), 24u);
  const std::vector<int> tgt = {1, 4};
  pf::decoder_forward(m, tgt, out, {.trace = &trace});
  EXPECT_EQ(trace.decoder.size(), 3u);
}

TEST(EncoderTest, OutOfVocabularyAndOverlongInputRejected) {
  const pf::Model m = pf::build_model(fixtures::tiny(Architecture::partialformer));
  const std::vector<int> bad = {4, 11};
  EXPECT_THROW(pf::encoder_forward(m, bad), pf::InputError);
  const std::vector<int> longer(17, 4);
  EXPECT_THROW(pf::encoder_forward(m, longer), pf::InputError);
}

TEST(EncoderTest, EncoderOnlyModelHasNoDecoder) {
  auto c = fixtures::tiny(Architecture::partialformer);
  c.decoder_layers = 0;
  const pf::Model m = pf::build_model(c);
  const std::vector<int> src = {4, 5};
  const auto out = pf::encoder_forward(m, src);
  EXPECT_EQ(out.states.size(), 2u);
  EXPECT_THROW(pf::decoder_forward(m, src, out), pf::UsageError);
}

TEST(DecoderTest, TwelveUnifiedSublayersForSixLayers) {
  auto c = fixtures::tiny(Architecture::partialformer);
  c.decoder_layers = 6;
  const pf::Model m = pf::build_model(c);
  const std::vector<int> src = {4, 5}, tgt = {1, 6, 7};
  const auto enc = pf::encoder_forward(m, src);
  pf::ForwardTrace trace;
  pf::decoder_forward(m, tgt, enc, {.trace = &trace});
  std::size_t unified = 0;
  for (const auto& layer : trace.decoder)
    for (const auto& sub : layer.sublayers) unified += sub.kind == pf::SublayerKind::unified;
  EXPECT_EQ(unified, 12u);
  EXPECT_EQ(trace.sublayers_executed, 12u);
}

TEST(DecoderTest, GlobalLogitsComputedOncePerSite) {
  const pf::Model m = pf::build_model(fixtures::tiny(Architecture::partialformer));
  const std::vector<int> src = {4, 5, 6}, tgt = {1, 6};
  const std::size_t before = pf::global_logits_compute_count();
  pf::ForwardTrace trace;
  pf::forward(m, src, tgt, {.trace = &trace});
  EXPECT_EQ(pf::global_logits_compute_count() - before, 3u);
  EXPECT_EQ(trace.global_logits_computed, 3u);
  const pf::Model v = pf::build_model(fixtures::tiny(Architecture::vanilla_pgffn));
  const std::size_t mid = pf::global_logits_compute_count();
  pf::forward(v, src, tgt);
  EXPECT_EQ(pf::global_logits_compute_count(), mid);
}

TEST(DecoderTest, EditingTokenLeavesEarlierLogitsBitIdentical) {
  for (Architecture arch : kArchs) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      pf::Model m = pf::build_model(fixtures::tiny(arch, seed));
      pf::Rng rng(seed);
      fixtures::randomize(m, rng);
      const auto src = fixtures::random_tokens(rng, 3, 11);
      auto tgt = fixtures::random_tokens(rng, 2 + rng.below(5), 11);
      const std::size_t j = rng.below(tgt.size());
      const Tensor a = pf::forward(m, src, tgt);
      tgt[j] = static_cast<int>((static_cast<std::size_t>(tgt[j]) + 1 + rng.below(10)) % 11);
      const Tensor b = pf::forward(m, src, tgt);
      for (std::size_t i = 0; i < j * 11; ++i) ASSERT_EQ(a.data()[i], b.data()[i]) << pf::to_string(arch);
    }
  }
}

TEST(DecoderTest, TeacherForcingEqualsPrefixRecompute) {
  for (Architecture arch : kArchs) {
    pf::Model m = pf::build_model(fixtures::tiny(arch, 3));
    pf::Rng rng(4);
    fixtures::randomize(m, rng);
    const std::vector<int> src = {4, 8, 6, 5};
    const std::vector<int> tgt = {1, 7, 9, 4, 10};
    const Tensor full = pf::forward(m, src, tgt);
    const auto enc = pf::encoder_forward(m, src);
    for (std::size_t t = 1; t <= tgt.size(); ++t) {
      const Tensor step = pf::decoder_forward(m, std::span(tgt).first(t), enc);
      for (std::size_t v = 0; v < 11; ++v)
        EXPECT_NEAR(step.at({t - 1, v}), full.at({t - 1, v}), 1e-12) << pf::to_string(arch);
    }
  }
}

TEST(ForwardTest, DeterministicUnderFixedSeed) {
  for (Architecture arch : kArchs) {
    const auto c = fixtures::tiny(arch, 9);
    const pf::Model a = pf::build_model(c), b = pf::build_model(c);
    const std::vector<int> src = {4, 5, 6}, tgt = {1, 7};
    EXPECT_EQ(oracle::vec(pf::forward(a, src, tgt)), oracle::vec(pf::forward(b, src, tgt)));
    pf::Rng r1(1), r2(1);
    EXPECT_EQ(oracle::vec(pf::forward(a, src, tgt, {.training = true, .rng = &r1})),
              oracle::vec(pf::forward(b, src, tgt, {.training = true, .rng = &r2})));
  }
}

TEST(ForwardTest, DropoutOnlyWhenTraining) {
  auto c = fixtures::tiny(Architecture::partialformer);
  c.dropout = c.attention_dropout = c.relu_dropout = 0.3;
  const pf::Model m = pf::build_model(c);
  const std::vector<int> src = {4, 5, 6}, tgt = {1, 7};
  pf::Rng rng(1);
  const auto eval = oracle::vec(pf::forward(m, src, tgt, {.rng = &rng}));
  EXPECT_EQ(eval, oracle::vec(pf::forward(m, src, tgt)));
  EXPECT_NE(eval, oracle::vec(pf::forward(m, src, tgt, {.training = true, .rng = &rng})));
}

TEST(ModelTest, CloneIsDeepAndEqual) {
  pf::Model m = pf::build_model(fixtures::tiny(Architecture::partialformer));
  pf::Rng rng(2);
  fixtures::randomize(m, rng);
  pf::Model copy = m.clone();
  const std::vector<int> src = {4, 5}, tgt = {1, 6};
  EXPECT_EQ(oracle::vec(pf::forward(m, src, tgt)), oracle::vec(pf::forward(copy, src, tgt)));
  oracle::zero(copy.registry.entries().back().tensor);
  EXPECT_NE(oracle::vec(m.registry.entries().back().tensor), oracle::vec(copy.registry.entries().back().tensor));
}

TEST(ModelTest, SharedEmbeddingsAreOneTensor) {
  const pf::Model m = pf::build_model(fixtures::tiny(Architecture::vanilla));
  EXPECT_EQ(m.src_embedding.node(), m.tgt_embedding.node());
  EXPECT_EQ(m.src_embedding.node(), m.output_projection.node());
  auto c = fixtures::tiny(Architecture::vanilla);
  c.share_embeddings = false;
  const pf::Model u = pf::build_model(c);
  EXPECT_NE(u.src_embedding.node(), u.tgt_embedding.node());
  EXPECT_TRUE(u.registry.find("output.proj"));
}

TEST(ModelGradTest, EveryParameterMatchesFiniteDifferences) {
  for (Architecture arch : kArchs) {
    auto c = fixtures::tiny(arch, 2);
    c.share_embeddings = arch != Architecture::vanilla_pgffn;
    pf::Model m = pf::build_model(c);
    pf::Rng rng(5);
    fixtures::randomize(m, rng, 0.4);
    const std::vector<int> src = {4, 9, 6}, tgt = {1, 7, 5};
    const std::vector<int> out = pf::decoder_output(std::span(tgt).subspan(1));
    std::vector<gradcheck::Param> params;
    for (const auto& e : m.registry.entries()) params.push_back({e.path, e.tensor});
    const auto r = gradcheck::check(
        [&] { return pf::label_smoothed_ce(pf::forward(m, src, tgt), out, 0.1); }, params);
    EXPECT_LT(r.max_rel_error, 1e-4) << pf::to_string(arch) << " at " << r.worst;
    EXPECT_EQ(r.unresolved, 0u);
  }
}

}  // namespace
