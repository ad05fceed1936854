// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "partialformer/errors.hpp"

namespace pf {

namespace {

Tensor xavier(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> data(fan_in * fan_out);
  for (double& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from_data({fan_in, fan_out}, std::move(data), true);
}

Tensor zeros_param(std::size_t n) { return Tensor::zeros({n}, true); }
Tensor ones_param(std::size_t n) { return Tensor::full({n}, 1.0, true); }

class Builder {
 public:
  Builder(Model& model, Rng& rng) : model_(model), rng_(rng) {}

  Tensor matrix(const std::string& path, std::size_t rows, std::size_t cols) {
    return model_.registry.add(path, xavier(rng_, rows, cols));
  }
  Tensor bias(const std::string& path, std::size_t n) { return model_.registry.add(path, zeros_param(n)); }

  LayerNormParams norm(const std::string& prefix, std::size_t d) {
    return {model_.registry.add(prefix + ".gain", ones_param(d)), model_.registry.add(prefix + ".bias", zeros_param(d))};
  }

  AttentionBundle bundle(const std::string& prefix, const HeadSpec& spec, AttentionSite site) {
    const std::size_t d = spec.model_dim, qk = spec.inter_heads * spec.head_dim, hv = spec.heads * spec.head_dim;
    AttentionBundle b;
    b.site = site;
    b.w_q = matrix(prefix + ".w_q", d, qk);
    b.w_k = matrix(prefix + ".w_k", d, qk);
    b.w_v = matrix(prefix + ".w_v", d, hv);
    b.w_o = matrix(prefix + ".w_o", hv, d);
    if (spec.head_scaling()) {
      const std::size_t mid = spec.expansion_hidden();
      b.expansion = HeadExpansionParams{
          matrix(prefix + ".expand.w1", spec.inter_heads, mid),
          bias(prefix + ".expand.b1", mid),
          matrix(prefix + ".expand.w2", mid, spec.heads),
          bias(prefix + ".expand.b2", spec.heads),
      };
    }
    return b;
  }

  PGFFNParams pgffn(const std::string& prefix, const HeadSpec& spec, std::size_t ratio, Activation sigma) {
    const std::size_t dk = spec.head_dim, hidden = ratio * dk;
    PGFFNParams p;
    p.w1 = matrix(prefix + ".w1", dk, hidden);
    p.b1 = bias(prefix + ".b1", hidden);
    p.w2 = matrix(prefix + ".w2", hidden, dk);
    p.b2 = bias(prefix + ".b2", dk);
    p.w_gate = matrix(prefix + ".w_gate", spec.model_dim, spec.heads * dk);
    p.heads = spec.heads;
    p.gate_activation = sigma;
    return p;
  }

  FeedForwardParams ffn(const std::string& prefix, std::size_t d, std::size_t hidden) {
    return {matrix(prefix + ".w1", d, hidden), bias(prefix + ".b1", hidden), matrix(prefix + ".w2", hidden, d),
            bias(prefix + ".b2", d)};
  }

  GlobalLogitParams global(const std::string& prefix, const HeadSpec& spec) {
    const std::size_t width = spec.heads * spec.head_dim;
    return {matrix(prefix + ".w_q", spec.model_dim, width), matrix(prefix + ".w_k", spec.model_dim, width)};
  }

 private:
  Model& model_;
  Rng& rng_;
};

Sublayer make_sublayer(const ModelConfig& c, SublayerKind kind, AttentionSite site, const HeadSpec& spec) {
  Sublayer s;
  s.kind = kind;
  s.site = site;
  s.spec = spec;
  s.norm_eps = c.layer_norm_eps;
  s.dropout = {c.dropout, c.attention_dropout, c.relu_dropout};
  return s;
}

bool dropout_on(const ForwardOptions& options) { return options.training && options.rng != nullptr; }

Tensor maybe_dropout(const Tensor& x, double p, const ForwardOptions& options) {
  if (!dropout_on(options) || p <= 0.0) return x;
  return dropout(x, p, *options.rng);
}

SoftmaxDiagnostics* diagnostics(const ForwardOptions& options) {
  return options.trace ? &options.trace->softmax : nullptr;
}

bool capture_hidden(const ForwardOptions& options, const SublayerTrace* trace) {
  return trace && options.trace && options.trace->capture_ffn_hidden;
}

HeadSpec global_spec(const HeadSpec& site_spec) {
  return {site_spec.heads, site_spec.inter_heads, site_spec.head_dim, site_spec.model_dim};
}

ProjectedQKV local_logits_inputs(const Tensor& h, const Tensor* kv, const Sublayer& sub, Tensor& s) {
  ProjectedQKV qkv = project_qkv(h, kv ? *kv : h, sub.attn, sub.spec);
  s = attention_logits(qkv.q, qkv.k, sub.spec.head_dim);
  if (sub.spec.head_scaling()) s = expand_heads(s, *sub.attn.expansion, sub.spec);
  return qkv;
}

void run_layer(const Layer& layer, Tensor& x, const Tensor* memory, const GlobalLogits* self_global,
               const GlobalLogits* cross_global, const Tensor* self_mask, const ForwardOptions& options,
               LayerTrace* trace) {
  for (const Sublayer& sub : layer.sublayers) {
    SublayerTrace* st = nullptr;
    if (trace) {
      trace->sublayers.emplace_back();
      st = &trace->sublayers.back();
    }
    const bool cross = sub.site == AttentionSite::cross;
    const Tensor* kv = cross ? memory : nullptr;
    const Tensor* mask = cross ? nullptr : self_mask;
    switch (sub.kind) {
      case SublayerKind::attention:
        x = attention_sublayer(x, kv, sub, mask, options, st);
        break;
      case SublayerKind::unified:
        x = unified_sublayer(x, kv, cross ? cross_global : self_global, sub, mask, options, st);
        break;
      case SublayerKind::feed_forward:
        x = feed_forward_sublayer(x, sub, options, st);
        break;
    }
    if (options.trace) ++options.trace->sublayers_executed;
  }
  if (trace) trace->state = x;
}

}  // namespace

Architecture parse_architecture(std::string_view tag) {
  if (tag == "vanilla") return Architecture::vanilla;
  if (tag == "partialformer") return Architecture::partialformer;
  if (tag == "vanilla_pgffn") return Architecture::vanilla_pgffn;
  throw ConfigError("arch: unknown architecture '" + std::string(tag) +
                    "' (expected vanilla, partialformer or vanilla_pgffn)");
}

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::vanilla:
      return "vanilla";
    case Architecture::partialformer:
      return "partialformer";
    case Architecture::vanilla_pgffn:
      return "vanilla_pgffn";
  }
  return "partialformer";
}

HeadSpec ModelConfig::encoder_spec() const {
  if (arch == Architecture::partialformer) return HeadSpec::for_heads(encoder_heads, head_dim, model_dim);
  return {encoder_heads, encoder_heads, head_dim, model_dim};
}

HeadSpec ModelConfig::decoder_spec() const {
  if (arch == Architecture::partialformer) return HeadSpec::for_heads(decoder_heads, head_dim, model_dim);
  return {decoder_heads, decoder_heads, head_dim, model_dim};
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (encoder_layers < 1) fail("N: encoder depth must be at least 1");
  if (model_dim < 1) fail("d: model width must be at least 1");
  if (head_dim < 1) fail("d_k: head width must be at least 1");
  if (encoder_heads < 1) fail("H_enc: must be at least 1");
  if (decoder_layers > 0 && decoder_heads < 1) fail("H_dec: must be at least 1");
  if (vocab_size < 4) fail("vocab_size: must be at least 4 (pad, bos, eos, unk are reserved)");
  if (max_len < 1) fail("max_len: must be at least 1");
  if (encoder_ffn_ratio < 1) fail("r_enc: must be at least 1");
  if (decoder_ffn_ratio < 1) fail("r_dec: must be at least 1");
  if (!(layer_norm_eps > 0.0)) fail("layer_norm_eps: must be positive");
  for (auto [name, p] : {std::pair{"dropout", dropout}, std::pair{"attention_dropout", attention_dropout},
                         std::pair{"relu_dropout", relu_dropout}}) {
    if (!(p >= 0.0 && p < 1.0)) fail(std::string(name) + ": must lie in [0, 1)");
  }
  if (arch == Architecture::partialformer) {
    if (model_dim % head_dim != 0) {
      fail("d_k: must divide d so the intermediate head count d/d_k is an integer");
    }
  } else {
    if (encoder_heads * head_dim != model_dim) fail("H_enc: " + to_string(arch) + " requires H_enc * d_k == d");
    if (decoder_layers > 0 && decoder_heads * head_dim != model_dim) {
      fail("H_dec: " + to_string(arch) + " requires H_dec * d_k == d");
    }
  }
}

Tensor& ParameterRegistry::add(std::string path, Tensor tensor) {
  if (index_.count(path)) throw UsageError("duplicate parameter path '" + path + "'");
  index_.emplace(path, entries_.size());
  entries_.push_back({std::move(path), std::move(tensor)});
  return entries_.back().tensor;
}

const Tensor* ParameterRegistry::find(std::string_view path) const {
  auto it = index_.find(path);
  return it == index_.end() ? nullptr : &entries_[it->second].tensor;
}

const Tensor& ParameterRegistry::at(std::string_view path) const {
  const Tensor* t = find(path);
  if (!t) throw UsageError("no parameter at path '" + std::string(path) + "'");
  return *t;
}

std::size_t ParameterRegistry::total_numel() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

void ParameterRegistry::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

Tensor sinusoidal_positions(std::size_t max_len, std::size_t dim) {
  std::vector<double> data(max_len * dim);
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      const double angle = static_cast<double>(pos) * rate;
      data[pos * dim + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return Tensor::from_data({max_len, dim}, std::move(data));
}

Model build_model(const ModelConfig& config, Rng& rng) {
  config.validate();
  Model m;
  m.config = config;
  Builder b(m, rng);
  const std::size_t d = config.model_dim, v = config.vocab_size;
  const bool has_decoder = config.decoder_layers > 0;

  if (config.share_embeddings) {
    m.src_embedding = b.matrix("embed.tokens", v, d);
    m.tgt_embedding = m.src_embedding;
    m.output_projection = m.src_embedding;
  } else {
    m.src_embedding = b.matrix("embed.src", v, d);
    if (has_decoder) {
      m.tgt_embedding = b.matrix("embed.tgt", v, d);
      m.output_projection = b.matrix("output.proj", v, d);
    }
  }
  m.positions = sinusoidal_positions(config.max_len, d);

  const HeadSpec enc = config.encoder_spec();
  const HeadSpec dec = has_decoder ? config.decoder_spec() : HeadSpec{};
  const Activation sigma = config.gate_activation;

  for (std::size_t i = 0; i < config.encoder_layers; ++i) {
    const std::string p = "encoder.layers." + std::to_string(i);
    Layer layer;
    if (config.arch == Architecture::vanilla) {
      Sublayer attn = make_sublayer(config, SublayerKind::attention, AttentionSite::encoder_self, enc);
      attn.norm = b.norm(p + ".self.norm", d);
      attn.attn = b.bundle(p + ".self.attn", enc, AttentionSite::encoder_self);
      Sublayer ffn = make_sublayer(config, SublayerKind::feed_forward, AttentionSite::encoder_self, enc);
      ffn.norm = b.norm(p + ".ffn.norm", d);
      ffn.ffn = b.ffn(p + ".ffn", d, config.effective_ffn_dim());
      layer.sublayers = {std::move(attn), std::move(ffn)};
    } else {
      Sublayer u = make_sublayer(config, SublayerKind::unified, AttentionSite::encoder_self, enc);
      u.norm = b.norm(p + ".self.norm", d);
      u.attn = b.bundle(p + ".self.attn", enc, AttentionSite::encoder_self);
      u.pgffn = b.pgffn(p + ".self.pgffn", enc, config.encoder_ffn_ratio, sigma);
      u.uses_global = config.arch == Architecture::partialformer;
      layer.sublayers = {std::move(u)};
    }
    m.encoder.push_back(std::move(layer));
  }
  m.encoder_norm = b.norm("encoder.final_norm", d);

  for (std::size_t i = 0; i < config.decoder_layers; ++i) {
    const std::string p = "decoder.layers." + std::to_string(i);
    Layer layer;
    const bool pf = config.arch == Architecture::partialformer;
    // Self site: unified only for partialformer.
    Sublayer self = make_sublayer(config, pf ? SublayerKind::unified : SublayerKind::attention,
                                  AttentionSite::decoder_self, dec);
    self.norm = b.norm(p + ".self.norm", d);
    self.attn = b.bundle(p + ".self.attn", dec, AttentionSite::decoder_self);
    if (pf) {
      self.pgffn = b.pgffn(p + ".self.pgffn", dec, config.decoder_ffn_ratio, sigma);
      self.uses_global = true;
    }
    const bool cross_unified = config.arch != Architecture::vanilla;
    Sublayer cross = make_sublayer(config, cross_unified ? SublayerKind::unified : SublayerKind::attention,
                                   AttentionSite::cross, dec);
    cross.norm = b.norm(p + ".cross.norm", d);
    cross.attn = b.bundle(p + ".cross.attn", dec, AttentionSite::cross);
    if (cross_unified) {
      cross.pgffn = b.pgffn(p + ".cross.pgffn", dec, config.decoder_ffn_ratio, sigma);
      cross.uses_global = pf;
    }
    layer.sublayers.push_back(std::move(self));
    layer.sublayers.push_back(std::move(cross));
    if (config.arch == Architecture::vanilla) {
      Sublayer ffn = make_sublayer(config, SublayerKind::feed_forward, AttentionSite::decoder_self, dec);
      ffn.norm = b.norm(p + ".ffn.norm", d);
      ffn.ffn = b.ffn(p + ".ffn", d, config.effective_ffn_dim());
      layer.sublayers.push_back(std::move(ffn));
    }
    m.decoder.push_back(std::move(layer));
  }
  if (has_decoder) m.decoder_norm = b.norm("decoder.final_norm", d);

  if (config.arch == Architecture::partialformer) {
    m.global_encoder = b.global("global.encoder_self", enc);
    if (has_decoder) {
      m.global_decoder = b.global("global.decoder_self", dec);
      m.global_cross = b.global("global.cross", dec);
    }
  }
  return m;
}

Model build_model(const ModelConfig& config) {
  Rng rng(config.seed);
  return build_model(config, rng);
}

Model Model::clone() const {
  Rng scratch(config.seed);
  Model copy = build_model(config, scratch);
  copy.assign_parameters(registry);
  return copy;
}

void Model::assign_parameters(const ParameterRegistry& source) {
  if (source.size() != registry.size()) {
    throw UsageError("assign_parameters: registry sizes differ (" + std::to_string(source.size()) + " vs " +
                     std::to_string(registry.size()) + ")");
  }
  for (std::size_t i = 0; i < registry.size(); ++i) {
    const NamedParameter& src = source.entries()[i];
    const NamedParameter& dst = registry.entries()[i];
    if (src.path != dst.path || src.tensor.shape() != dst.tensor.shape()) {
      throw UsageError("assign_parameters: mismatch at '" + dst.path + "'");
    }
    Tensor target = dst.tensor;
    auto out = target.mutable_data();
    auto in = src.tensor.data();
    std::copy(in.begin(), in.end(), out.begin());
  }
}

Tensor embed(const Model& model, const Tensor& table, std::span<const int> ids, const ForwardOptions& options) {
  const std::size_t t = ids.size(), d = model.config.model_dim;
  if (t == 0) throw InputError("empty token sequence");
  if (t > model.config.max_len) {
    throw InputError("sequence length " + std::to_string(t) + " exceeds max_len " +
                     std::to_string(model.config.max_len));
  }
  Tensor x = scale(embedding(table, ids), std::sqrt(static_cast<double>(d)));
  if (model.config.positional_encoding) {
    auto pos = model.positions.data();
    x = add(x, Tensor::from_data({t, d}, std::vector<double>(pos.begin(), pos.begin() + t * d)));
  }
  return maybe_dropout(x, model.config.dropout, options);
}

Tensor attention_sublayer(const Tensor& x, const Tensor* kv, const Sublayer& sub, const Tensor* mask,
                          const ForwardOptions& options, SublayerTrace* trace) {
  Tensor h = layer_norm(x, sub.norm.gain, sub.norm.bias, sub.norm_eps);
  Tensor s;
  ProjectedQKV qkv = local_logits_inputs(h, kv, sub, s);
  Tensor probs;
  AttendOptions ao;
  ao.mask = mask;
  ao.dropout = dropout_on(options) ? sub.dropout.attention : 0.0;
  ao.rng = options.rng;
  ao.diagnostics = diagnostics(options);
  ao.probs_out = trace ? &probs : nullptr;
  Tensor heads = attend(s, nullptr, qkv.v, ao);
  Tensor y = matmul(merge_heads(heads), sub.attn.w_o);
  if (trace) {
    trace->kind = sub.kind;
    trace->site = sub.site;
    trace->attention_probs = probs;
    trace->head_outputs = heads;
  }
  return add(x, maybe_dropout(y, sub.dropout.residual, options));
}

Tensor feed_forward_sublayer(const Tensor& x, const Sublayer& sub, const ForwardOptions& options,
                             SublayerTrace* trace) {
  Tensor h = layer_norm(x, sub.norm.gain, sub.norm.bias, sub.norm_eps);
  Tensor hidden = relu(add_bias(matmul(h, sub.ffn.w1), sub.ffn.b1));
  if (trace) {
    trace->kind = sub.kind;
    trace->site = sub.site;
    trace->ffn_params = sub.ffn.w1.numel() + sub.ffn.b1.numel() + sub.ffn.w2.numel() + sub.ffn.b2.numel();
    if (capture_hidden(options, trace)) {
      trace->ffn_hidden = HiddenProbe{hidden.dim(0), hidden.dim(1), {hidden.data().begin(), hidden.data().end()}};
    }
  }
  hidden = maybe_dropout(hidden, sub.dropout.hidden, options);
  Tensor y = add_bias(matmul(hidden, sub.ffn.w2), sub.ffn.b2);
  return add(x, maybe_dropout(y, sub.dropout.residual, options));
}

Tensor unified_sublayer(const Tensor& x, const Tensor* kv, const GlobalLogits* global, const Sublayer& sub,
                        const Tensor* mask, const ForwardOptions& options, SublayerTrace* trace) {
  const GlobalLogits* g = sub.uses_global ? global : nullptr;
  if (sub.uses_global && !global) {
    throw UsageError("unified sub-layer at site " + to_string(sub.site) + " expects global logits");
  }
  if (g && g->site != sub.site) {
    throw UsageError("global logits for site " + to_string(g->site) + " passed to a " + to_string(sub.site) +
                     " sub-layer");
  }
  Tensor h = layer_norm(x, sub.norm.gain, sub.norm.bias, sub.norm_eps);
  Tensor s;
  ProjectedQKV qkv = local_logits_inputs(h, kv, sub, s);
  Tensor probs;
  AttendOptions ao;
  ao.mask = mask;
  ao.dropout = dropout_on(options) ? sub.dropout.attention : 0.0;
  ao.rng = options.rng;
  ao.diagnostics = diagnostics(options);
  ao.probs_out = trace ? &probs : nullptr;
  Tensor heads = attend(s, g, qkv.v, ao);

  Tensor gates;
  if (options.gate_mode == GateMode::open) {
    gates = Tensor::full(heads.shape(), 1.0);
  } else {
    gates = maybe_dropout(generate_gates(h, sub.pgffn), sub.dropout.hidden, options);
  }
  std::optional<HiddenProbe> probe;
  if (capture_hidden(options, trace)) probe.emplace();
  const double hidden_p = dropout_on(options) ? sub.dropout.hidden : 0.0;
  Tensor o = pg_ffn(heads, gates, sub.pgffn, probe ? &*probe : nullptr, hidden_p, options.rng);
  Tensor y = fuse_heads(o, sub.attn.w_o);
  if (trace) {
    trace->kind = sub.kind;
    trace->site = sub.site;
    trace->attention_probs = probs;
    trace->head_outputs = o;
    trace->ffn_hidden = std::move(probe);
    trace->ffn_params = sub.pgffn.ffn_param_count() + sub.pgffn.w_gate.numel();
  }
  return add(x, maybe_dropout(y, sub.dropout.residual, options));
}

EncoderOutput encoder_forward(const Model& model, std::span<const int> src, const ForwardOptions& options) {
  EncoderOutput out;
  out.embeddings = embed(model, model.src_embedding, src, options);
  const GlobalLogits* global = nullptr;
  if (model.global_encoder) {
    out.global = compute_global_logits(out.embeddings, out.embeddings, *model.global_encoder,
                                       global_spec(model.encoder.front().sublayers.front().spec),
                                       AttentionSite::encoder_self, nullptr, model.config.global_logits_post_softmax);
    global = &*out.global;
    if (options.trace) ++options.trace->global_logits_computed;
  }
  Tensor x = out.embeddings;
  for (const Layer& layer : model.encoder) {
    LayerTrace* lt = nullptr;
    if (options.trace) {
      options.trace->encoder.emplace_back();
      lt = &options.trace->encoder.back();
    }
    run_layer(layer, x, nullptr, global, nullptr, nullptr, options, lt);
    out.states.push_back(x);
  }
  out.output = layer_norm(x, model.encoder_norm.gain, model.encoder_norm.bias, model.config.layer_norm_eps);
  return out;
}

Tensor decoder_forward(const Model& model, std::span<const int> tgt, const EncoderOutput& encoded,
                       const ForwardOptions& options) {
  if (model.decoder.empty()) throw UsageError("decoder_forward: model has no decoder layers (M = 0)");
  const std::size_t t = tgt.size();
  Tensor emb = embed(model, model.tgt_embedding, tgt, options);
  Tensor mask = causal_mask(t, t);
  std::optional<GlobalLogits> self_global, cross_global;
  if (model.global_decoder) {
    const HeadSpec spec = global_spec(model.decoder.front().sublayers.front().spec);
    const bool post = model.config.global_logits_post_softmax;
    self_global = compute_global_logits(emb, emb, *model.global_decoder, spec, AttentionSite::decoder_self, &mask, post);
    cross_global =
        compute_global_logits(emb, encoded.embeddings, *model.global_cross, spec, AttentionSite::cross, nullptr, post);
    if (options.trace) options.trace->global_logits_computed += 2;
  }
  Tensor x = emb;
  for (const Layer& layer : model.decoder) {
    LayerTrace* lt = nullptr;
    if (options.trace) {
      options.trace->decoder.emplace_back();
      lt = &options.trace->decoder.back();
    }
    run_layer(layer, x, &encoded.output, self_global ? &*self_global : nullptr,
              cross_global ? &*cross_global : nullptr, &mask, options, lt);
  }
  x = layer_norm(x, model.decoder_norm.gain, model.decoder_norm.bias, model.config.layer_norm_eps);
  return matmul_nt(x, model.output_projection);
}

Tensor forward(const Model& model, std::span<const int> src, std::span<const int> tgt,
               const ForwardOptions& options) {
  EncoderOutput encoded = encoder_forward(model, src, options);
  return decoder_forward(model, tgt, encoded, options);
}

Tensor vanilla_forward(const Model& model, std::span<const int> src, std::span<const int> tgt,
                       const ForwardOptions& options) {
  if (model.config.arch != Architecture::vanilla) {
    throw UsageError("vanilla_forward on a " + to_string(model.config.arch) + " model");
  }
  return forward(model, src, tgt, options);
}

Tensor vanilla_pgffn_forward(const Model& model, std::span<const int> src, std::span<const int> tgt,
                             const ForwardOptions& options) {
  if (model.config.arch != Architecture::vanilla_pgffn) {
    throw UsageError("vanilla_pgffn_forward on a " + to_string(model.config.arch) + " model");
  }
  return forward(model, src, tgt, options);
}

}  // namespace pf
