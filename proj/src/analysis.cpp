// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "partialformer/checkpoint.hpp"
#include "partialformer/errors.hpp"
#include "parallel.hpp"

namespace pf {

namespace {

using u64 = std::uint64_t;

class Tally {
 public:
  void add(const std::string& module, u64 n) {
    if (n == 0) return;
    for (auto& e : entries_) {
      if (e.module == module) {
        e.count += n;
        return;
      }
    }
    entries_.push_back({module, n});
  }
  std::vector<CountEntry> take() { return std::move(entries_); }

 private:
  std::vector<CountEntry> entries_;
};

u64 total_of(const std::vector<CountEntry>& entries) {
  u64 t = 0;
  for (const auto& e : entries) t += e.count;
  return t;
}

// Parameters of one attention site (projections, optional expansion MLP).
void attention_params(Tally& t, const std::string& stack, const HeadSpec& s) {
  const u64 d = s.model_dim, qk = s.inter_heads * s.head_dim, hv = s.heads * s.head_dim;
  t.add(stack + ".attention", 2 * d * qk + d * hv + hv * d);
  if (s.head_scaling()) {
    const u64 mid = s.expansion_hidden();
    t.add(stack + ".head_expansion", s.inter_heads * mid + mid + mid * s.heads + s.heads);
  }
}

void pgffn_params(Tally& t, const std::string& stack, const HeadSpec& s, u64 ratio) {
  const u64 dk = s.head_dim, hidden = ratio * dk;
  t.add(stack + ".pgffn.ffn", 2 * dk * hidden + hidden + dk);
  t.add(stack + ".pgffn.gates", s.model_dim * s.heads * dk);
}

void ffn_params(Tally& t, const std::string& stack, u64 d, u64 hidden) {
  t.add(stack + ".ffn", 2 * d * hidden + hidden + d);
}

struct SiteMacs {
  u64 projections = 0;
  u64 expansion = 0;
  u64 products = 0;
};

SiteMacs attention_macs(const HeadSpec& s, u64 tq, u64 tk) {
  const u64 d = s.model_dim, dk = s.head_dim, hi = s.inter_heads, h = s.heads;
  SiteMacs m;
  m.projections = tq * d * hi * dk + tk * d * hi * dk + tk * d * h * dk + tq * h * dk * d;
  m.products = hi * tq * tk * dk + h * tq * tk * dk;
  if (s.head_scaling()) {
    const u64 mid = s.expansion_hidden();
    m.expansion = tq * tk * (hi * mid + mid * h);
  }
  return m;
}

void add_attention_macs(Tally& t, const std::string& stack, const HeadSpec& s, u64 tq, u64 tk) {
  const SiteMacs m = attention_macs(s, tq, tk);
  t.add(stack + ".attention", m.projections + m.products);
  t.add(stack + ".head_expansion", m.expansion);
}

void add_pgffn_macs(Tally& t, const std::string& stack, const HeadSpec& s, u64 ratio, u64 tokens) {
  const u64 dk = s.head_dim;
  t.add(stack + ".pgffn", tokens * s.model_dim * s.heads * dk + s.heads * tokens * 2 * dk * ratio * dk);
}

void add_global_macs(Tally& t, const HeadSpec& s, u64 tq, u64 tk) {
  const u64 width = s.heads * s.head_dim;
  t.add("global_logits", tq * s.model_dim * width + tk * s.model_dim * width + s.heads * tq * tk * s.head_dim);
}

double pearson(const double* a, const double* b, std::size_t n, bool& degenerate) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  degenerate = saa == 0.0 || sbb == 0.0;
  if (degenerate) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

struct LayerAccumulator {
  double tu_sum = 0.0;
  std::size_t tu_n = 0;
  double hd_sum = 0.0;
  std::size_t hd_n = 0;
  double n_act_sum = 0.0;
  std::size_t ffn_n = 0;
  std::size_t hidden_dim = 0;
  std::size_t ffn_params = 0;
  std::size_t zero_norm_heads = 0;
  std::size_t zero_variance_pairs = 0;

  void observe(const LayerTrace& lt) {
    TokenUniformity tu = token_uniformity(lt.state);
    zero_variance_pairs += tu.excluded_pairs;
    if (tu.value) {
      tu_sum += *tu.value;
      ++tu_n;
    }
    double hd = 0.0;
    std::size_t hd_parts = 0;
    std::vector<FfnStats> parts;
    for (const SublayerTrace& st : lt.sublayers) {
      if (st.head_outputs.defined()) {
        HeadDiversity d = head_diversity(st.head_outputs);
        zero_norm_heads += d.zero_norm_heads;
        if (d.value) {
          hd += *d.value;
          ++hd_parts;
        }
      }
      if (st.ffn_hidden) parts.push_back(ffn_activation_stats(st.ffn_hidden, st.ffn_params));
    }
    if (hd_parts) {
      hd_sum += hd / static_cast<double>(hd_parts);
      ++hd_n;
    }
    if (!parts.empty()) {
      FfnStats merged = merge_ffn_stats(parts);
      n_act_sum += merged.n_act;
      hidden_dim = merged.hidden_dim;
      ffn_params = merged.param_count;
      ++ffn_n;
    }
  }

  void finish(LayerMetrics& out) const {
    if (tu_n) out.token_uniformity = tu_sum / static_cast<double>(tu_n);
    if (hd_n) out.head_diversity = hd_sum / static_cast<double>(hd_n);
    if (ffn_n) {
      FfnStats s;
      s.n_act = n_act_sum / static_cast<double>(ffn_n);
      s.hidden_dim = hidden_dim;
      s.param_count = ffn_params;
      s.r_act = hidden_dim ? s.n_act / static_cast<double>(hidden_dim) : 0.0;
      s.eta_ffn = ffn_params ? s.n_act / static_cast<double>(ffn_params) : 0.0;
      out.ffn = s;
    }
    out.zero_norm_heads = zero_norm_heads;
    out.zero_variance_pairs = zero_variance_pairs;
  }
};

LayerMetrics layer_row(std::string stack, std::size_t index) {
  LayerMetrics l;
  l.stack = std::move(stack);
  l.index = index;
  return l;
}

using ojson = nlohmann::ordered_json;

ojson opt(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> opt_real(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ojson counts_json(const std::vector<CountEntry>& entries) {
  ojson arr = ojson::array();
  for (const auto& e : entries) arr.push_back({{"module", e.module}, {"count", e.count}});
  return arr;
}

std::vector<CountEntry> counts_from(const nlohmann::json& j) {
  std::vector<CountEntry> out;
  for (const auto& e : j) out.push_back({e.at("module").get<std::string>(), e.at("count").get<u64>()});
  return out;
}

const char* kCsvHeader =
    "stack,index,token_uniformity,head_diversity,n_act,hidden_dim,r_act,eta_ffn,ffn_params,zero_norm_heads,"
    "zero_variance_pairs";

std::string real_field(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_field(const std::optional<double>& v) { return v ? real_field(*v) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_opt(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

}  // namespace

ParamBreakdown count_params(const ModelConfig& c) {
  c.validate();
  Tally t;
  const u64 d = c.model_dim, v = c.vocab_size;
  const bool dec = c.decoder_layers > 0;
  t.add("embedding", c.share_embeddings ? v * d : v * d * (dec ? 3 : 1));

  const HeadSpec enc = c.encoder_spec();
  for (std::size_t i = 0; i < c.encoder_layers; ++i) {
    attention_params(t, "encoder", enc);
    t.add("encoder.layer_norm", 2 * d);
    if (c.arch == Architecture::vanilla) {
      ffn_params(t, "encoder", d, c.effective_ffn_dim());
      t.add("encoder.layer_norm", 2 * d);
    } else {
      pgffn_params(t, "encoder", enc, c.encoder_ffn_ratio);
    }
  }
  t.add("encoder.layer_norm", 2 * d);

  if (dec) {
    const HeadSpec ds = c.decoder_spec();
    for (std::size_t i = 0; i < c.decoder_layers; ++i) {
      attention_params(t, "decoder", ds);  // self
      attention_params(t, "decoder", ds);  // cross
      t.add("decoder.layer_norm", 4 * d);
      switch (c.arch) {
        case Architecture::vanilla:
          ffn_params(t, "decoder", d, c.effective_ffn_dim());
          t.add("decoder.layer_norm", 2 * d);
          break;
        case Architecture::partialformer:
          pgffn_params(t, "decoder", ds, c.decoder_ffn_ratio);
          pgffn_params(t, "decoder", ds, c.decoder_ffn_ratio);
          break;
        case Architecture::vanilla_pgffn:
          pgffn_params(t, "decoder", ds, c.decoder_ffn_ratio);
          break;
      }
    }
    t.add("decoder.layer_norm", 2 * d);
  }

  if (c.arch == Architecture::partialformer) {
    t.add("global_logits", 2 * d * c.encoder_heads * c.head_dim);
    if (dec) t.add("global_logits", 2 * 2 * d * c.decoder_heads * c.head_dim);
  }
  ParamBreakdown out;
  out.modules = t.take();
  out.total = total_of(out.modules);
  return out;
}

MacBreakdown count_macs(const ModelConfig& c, std::size_t src_len, std::size_t tgt_len) {
  c.validate();
  if (src_len < 1 || tgt_len < 1) throw ConfigError("count_macs: src_len and tgt_len must be at least 1");
  Tally t;
  const u64 d = c.model_dim, s = src_len;
  const HeadSpec enc = c.encoder_spec();
  const bool pf = c.arch == Architecture::partialformer;

  if (pf) add_global_macs(t, enc, s, s);
  for (std::size_t i = 0; i < c.encoder_layers; ++i) {
    add_attention_macs(t, "encoder", enc, s, s);
    if (c.arch == Architecture::vanilla) {
      t.add("encoder.ffn", 2 * s * d * c.effective_ffn_dim());
    } else {
      add_pgffn_macs(t, "encoder", enc, c.encoder_ffn_ratio, s);
    }
  }

  if (c.decoder_layers > 0) {
    const HeadSpec ds = c.decoder_spec();
    for (u64 step = 1; step <= tgt_len; ++step) {
      if (pf) {
        add_global_macs(t, ds, step, step);
        add_global_macs(t, ds, step, s);
      }
      for (std::size_t i = 0; i < c.decoder_layers; ++i) {
        add_attention_macs(t, "decoder", ds, step, step);
        add_attention_macs(t, "decoder", ds, step, s);
        switch (c.arch) {
          case Architecture::vanilla:
            t.add("decoder.ffn", 2 * step * d * c.effective_ffn_dim());
            break;
          case Architecture::partialformer:
            add_pgffn_macs(t, "decoder", ds, c.decoder_ffn_ratio, step);
            add_pgffn_macs(t, "decoder", ds, c.decoder_ffn_ratio, step);
            break;
          case Architecture::vanilla_pgffn:
            add_pgffn_macs(t, "decoder", ds, c.decoder_ffn_ratio, step);
            break;
        }
      }
      t.add("decoder.output_projection", step * d * c.vocab_size);
    }
  }
  MacBreakdown out;
  out.parts = t.take();
  out.total = total_of(out.parts);
  out.src_len = src_len;
  out.tgt_len = tgt_len;
  return out;
}

HeadDiversity head_diversity(const Tensor& heads) {
  if (heads.rank() != 3) throw DimensionError("head_diversity: expected [H x T x d_k], got " + shape_str(heads.shape()));
  const std::size_t h = heads.dim(0), n = heads.dim(1) * heads.dim(2);
  auto data = heads.data();
  std::vector<double> norms(h);
  std::vector<std::size_t> live;
  HeadDiversity out;
  for (std::size_t i = 0; i < h; ++i) {
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) ss += data[i * n + k] * data[i * n + k];
    norms[i] = std::sqrt(ss);
    if (norms[i] > 0.0) {
      live.push_back(i);
    } else {
      ++out.zero_norm_heads;
    }
  }
  if (live.empty()) return out;
  double total = 0.0;
  for (std::size_t i : live) {
    for (std::size_t j : live) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += data[i * n + k] * data[j * n + k];
      total += std::fabs(dot) / (norms[i] * norms[j]);
    }
  }
  const double count = static_cast<double>(live.size());
  out.value = std::exp(-total / (count * count));
  return out;
}

TokenUniformity token_uniformity(const Tensor& states) {
  if (states.rank() != 2 || states.dim(0) < 2) {
    throw DimensionError("token_uniformity: expected [T x d] with T >= 2, got " + shape_str(states.shape()));
  }
  const std::size_t t = states.dim(0), d = states.dim(1);
  auto data = states.data();
  TokenUniformity out;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = i + 1; j < t; ++j) {
      bool degenerate = false;
      const double r = pearson(data.data() + i * d, data.data() + j * d, d, degenerate);
      if (degenerate) {
        ++out.excluded_pairs;
        continue;
      }
      total += r;
      ++pairs;
    }
  }
  if (pairs) out.value = total / static_cast<double>(pairs);
  return out;
}

FfnStats ffn_activation_stats(const std::optional<HiddenProbe>& probe, std::size_t param_count) {
  if (!probe) {
    throw UsageError("ffn_activation_stats: no hidden probe captured; run the forward pass with "
                     "ForwardTrace::capture_ffn_hidden enabled");
  }
  FfnStats s;
  s.hidden_dim = probe->width;
  s.param_count = param_count;
  std::size_t active = 0;
  for (double v : probe->values) active += v > 0.0;
  s.n_act = probe->tokens ? static_cast<double>(active) / static_cast<double>(probe->tokens) : 0.0;
  s.r_act = s.hidden_dim ? s.n_act / static_cast<double>(s.hidden_dim) : 0.0;
  s.eta_ffn = param_count ? s.n_act / static_cast<double>(param_count) : 0.0;
  return s;
}

FfnStats merge_ffn_stats(const std::vector<FfnStats>& parts) {
  FfnStats s;
  for (const auto& p : parts) {
    s.n_act += p.n_act;
    s.hidden_dim += p.hidden_dim;
    s.param_count += p.param_count;
  }
  s.r_act = s.hidden_dim ? s.n_act / static_cast<double>(s.hidden_dim) : 0.0;
  s.eta_ffn = s.param_count ? s.n_act / static_cast<double>(s.param_count) : 0.0;
  return s;
}

std::vector<std::size_t> ffn_hidden_dims(const ModelConfig& c) {
  c.validate();
  std::vector<std::size_t> dims;
  const std::size_t dk = c.head_dim;
  for (std::size_t i = 0; i < c.encoder_layers; ++i) {
    dims.push_back(c.arch == Architecture::vanilla ? c.effective_ffn_dim()
                                                   : c.encoder_heads * c.encoder_ffn_ratio * dk);
  }
  const std::size_t pg = c.decoder_heads * c.decoder_ffn_ratio * dk;
  for (std::size_t i = 0; i < c.decoder_layers; ++i) {
    switch (c.arch) {
      case Architecture::vanilla:
        dims.push_back(c.effective_ffn_dim());
        break;
      case Architecture::partialformer:
        dims.push_back(2 * pg);
        break;
      case Architecture::vanilla_pgffn:
        dims.push_back(pg);
        break;
    }
  }
  return dims;
}

AnalysisReport make_report(const ModelConfig& config, std::string label) {
  AnalysisReport r;
  r.label = std::move(label);
  r.config = config;
  r.params = count_params(config);
  for (std::size_t i = 0; i < config.encoder_layers; ++i) r.layers.push_back(layer_row("encoder", i));
  for (std::size_t i = 0; i < config.decoder_layers; ++i) r.layers.push_back(layer_row("decoder", i));
  return r;
}

void measure_behaviour(const Model& model, const std::vector<Sample>& samples, AnalysisReport& report,
                       std::size_t jobs) {
  const std::size_t n = model.config.encoder_layers, m = model.config.decoder_layers;
  std::vector<ForwardTrace> traces(samples.size());
  detail::parallel_for(samples.size(), jobs, [&](std::size_t s) {
    NoGradGuard no_grad;
    ForwardTrace& trace = traces[s];
    trace.capture_ffn_hidden = true;
    ForwardOptions options;
    options.trace = &trace;
    EncoderOutput enc = encoder_forward(model, samples[s].first, options);
    if (m > 0) decoder_forward(model, samples[s].second, enc, options);
  });
  std::vector<LayerAccumulator> acc(n + m);
  for (const ForwardTrace& trace : traces) {
    for (std::size_t i = 0; i < trace.encoder.size(); ++i) acc[i].observe(trace.encoder[i]);
    for (std::size_t i = 0; i < trace.decoder.size(); ++i) acc[n + i].observe(trace.decoder[i]);
  }
  report.layers.clear();
  for (std::size_t i = 0; i < n + m; ++i) {
    LayerMetrics lm = layer_row(i < n ? "encoder" : "decoder", i < n ? i : i - n);
    acc[i].finish(lm);
    report.layers.push_back(std::move(lm));
  }
  report.samples += samples.size();
}

std::optional<double> mean_head_diversity(const AnalysisReport& report) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& l : report.layers) {
    if (l.head_diversity) {
      total += *l.head_diversity;
      ++n;
    }
  }
  if (!n) return std::nullopt;
  return total / static_cast<double>(n);
}

ReportFormat parse_report_format(std::string_view tag) {
  if (tag == "json") return ReportFormat::json;
  if (tag == "csv") return ReportFormat::csv;
  throw UsageError("unknown report format '" + std::string(tag) + "' (expected json or csv)");
}

std::string emit_report(const AnalysisReport& r, std::string_view format) {
  return emit_report(r, parse_report_format(format));
}

std::string emit_report(const AnalysisReport& r, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& l : r.layers) {
      std::vector<std::string> cells = {l.stack, std::to_string(l.index), opt_field(l.token_uniformity),
                                        opt_field(l.head_diversity)};
      if (l.ffn) {
        cells.insert(cells.end(), {real_field(l.ffn->n_act), std::to_string(l.ffn->hidden_dim),
                                   real_field(l.ffn->r_act), real_field(l.ffn->eta_ffn),
                                   std::to_string(l.ffn->param_count)});
      } else {
        cells.insert(cells.end(), 5, std::string());
      }
      cells.push_back(std::to_string(l.zero_norm_heads));
      cells.push_back(std::to_string(l.zero_variance_pairs));
      for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
      out += "\n";
    }
    return out;
  }

  ojson j;
  j["schema_version"] = kReportSchemaVersion;
  j["label"] = r.label;
  j["config"] = ojson::parse(model_config_to_json(r.config).dump());
  j["params"] = {{"modules", counts_json(r.params.modules)}, {"total", r.params.total}};
  if (r.macs) {
    j["macs"] = {{"convention", r.macs->convention},
                 {"src_len", r.macs->src_len},
                 {"tgt_len", r.macs->tgt_len},
                 {"parts", counts_json(r.macs->parts)},
                 {"total", r.macs->total}};
  } else {
    j["macs"] = nullptr;
  }
  j["samples"] = r.samples;
  j["n_act_convention"] = "mean over tokens";
  ojson layers = ojson::array();
  for (const auto& l : r.layers) {
    ojson row;
    row["stack"] = l.stack;
    row["index"] = l.index;
    row["token_uniformity"] = opt(l.token_uniformity);
    row["head_diversity"] = opt(l.head_diversity);
    if (l.ffn) {
      row["ffn"] = {{"n_act", l.ffn->n_act},
                    {"hidden_dim", l.ffn->hidden_dim},
                    {"r_act", l.ffn->r_act},
                    {"eta_ffn", l.ffn->eta_ffn},
                    {"param_count", l.ffn->param_count}};
    } else {
      row["ffn"] = nullptr;
    }
    row["zero_norm_heads"] = l.zero_norm_heads;
    row["zero_variance_pairs"] = l.zero_variance_pairs;
    layers.push_back(std::move(row));
  }
  j["layers"] = std::move(layers);
  return j.dump(2) + "\n";
}

AnalysisReport parse_report_json(std::string_view text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
      throw InputError("unsupported report schema version " + j.at("schema_version").dump());
    }
    AnalysisReport r;
    r.label = j.at("label").get<std::string>();
    r.config = model_config_from_json(j.at("config"));
    r.params.modules = counts_from(j.at("params").at("modules"));
    r.params.total = j.at("params").at("total").get<u64>();
    if (!j.at("macs").is_null()) {
      const auto& m = j.at("macs");
      MacBreakdown mb;
      mb.convention = m.at("convention").get<std::string>();
      mb.src_len = m.at("src_len").get<std::size_t>();
      mb.tgt_len = m.at("tgt_len").get<std::size_t>();
      mb.parts = counts_from(m.at("parts"));
      mb.total = m.at("total").get<u64>();
      r.macs = mb;
    }
    r.samples = j.at("samples").get<std::size_t>();
    for (const auto& row : j.at("layers")) {
      LayerMetrics l;
      l.stack = row.at("stack").get<std::string>();
      l.index = row.at("index").get<std::size_t>();
      l.token_uniformity = opt_real(row.at("token_uniformity"));
      l.head_diversity = opt_real(row.at("head_diversity"));
      if (!row.at("ffn").is_null()) {
        const auto& f = row.at("ffn");
        l.ffn = FfnStats{f.at("n_act").get<double>(), f.at("hidden_dim").get<std::size_t>(),
                         f.at("r_act").get<double>(), f.at("eta_ffn").get<double>(),
                         f.at("param_count").get<std::size_t>()};
      }
      l.zero_norm_heads = row.at("zero_norm_heads").get<std::size_t>();
      l.zero_variance_pairs = row.at("zero_variance_pairs").get<std::size_t>();
      r.layers.push_back(std::move(l));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed report JSON: ") + e.what());
  }
}

std::vector<LayerMetrics> parse_report_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw InputError("report CSV: missing or unexpected header");
  std::vector<LayerMetrics> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 11) throw InputError("report CSV: expected 11 fields, got " + std::to_string(cells.size()));
    LayerMetrics l;
    l.stack = cells[0];
    l.index = std::stoul(cells[1]);
    l.token_uniformity = parse_opt(cells[2]);
    l.head_diversity = parse_opt(cells[3]);
    if (!cells[4].empty()) {
      l.ffn = FfnStats{std::stod(cells[4]), std::stoul(cells[5]), std::stod(cells[6]), std::stod(cells[7]),
                       std::stoul(cells[8])};
    }
    l.zero_norm_heads = std::stoul(cells[9]);
    l.zero_variance_pairs = std::stoul(cells[10]);
    rows.push_back(std::move(l));
  }
  return rows;
}

}  // namespace pf
