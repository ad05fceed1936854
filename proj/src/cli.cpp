// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "partialformer/analysis.hpp"
#include "partialformer/checkpoint.hpp"
#include "partialformer/errors.hpp"

namespace pf::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Typed field binding for the strict JSON sections.
template <typename T>
struct Field {
  std::function<json(const T&)> get;
  std::function<void(T&, const json&, const std::string&)> set;
};

std::size_t as_size(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(key + ": expected a non-negative integer, got " + v.dump());
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + ": expected a number, got " + v.dump());
  return v.get<double>();
}

std::string as_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + ": expected a string, got " + v.dump());
  return v.get<std::string>();
}

template <typename T, typename M>
Field<T> size_field(M T::*member) {
  return {[member](const T& c) { return json(c.*member); },
          [member](T& c, const json& v, const std::string& k) { c.*member = static_cast<M>(as_size(v, k)); }};
}

template <typename T>
Field<T> real_field(double T::*member) {
  return {[member](const T& c) { return json(c.*member); },
          [member](T& c, const json& v, const std::string& k) { c.*member = as_real(v, k); }};
}

const std::map<std::string, Field<TaskSpec>>& task_fields() {
  static const std::map<std::string, Field<TaskSpec>> fields = {
      {"kind",
       {[](const TaskSpec& t) { return json(to_string(t.kind)); },
        [](TaskSpec& t, const json& v, const std::string& k) {
          const std::string tag = as_string(v, k);
          try {
            t.kind = parse_task_kind(tag);
          } catch (const std::exception&) {
            throw ConfigError(k + ": unknown task '" + tag + "' (expected copy, reverse or sort)");
          }
        }}},
      {"vocab_size", size_field(&TaskSpec::vocab_size)},
      {"min_len", size_field(&TaskSpec::min_len)},
      {"max_len", size_field(&TaskSpec::max_len)},
      {"n_train", size_field(&TaskSpec::n_train)},
      {"n_eval", size_field(&TaskSpec::n_eval)},
      {"seed", size_field(&TaskSpec::seed)},
  };
  return fields;
}

const std::map<std::string, Field<TrainConfig>>& train_fields() {
  static const std::map<std::string, Field<TrainConfig>> fields = {
      {"lr_peak", real_field(&TrainConfig::lr_peak)},
      {"lr_init", real_field(&TrainConfig::lr_init)},
      {"warmup_steps", size_field(&TrainConfig::warmup_steps)},
      {"total_steps", size_field(&TrainConfig::total_steps)},
      {"beta1", real_field(&TrainConfig::beta1)},
      {"beta2", real_field(&TrainConfig::beta2)},
      {"adam_eps", real_field(&TrainConfig::adam_eps)},
      {"label_smoothing", real_field(&TrainConfig::label_smoothing)},
      {"batch_tokens", size_field(&TrainConfig::batch_tokens)},
      {"clip_norm", real_field(&TrainConfig::clip_norm)},
      {"checkpoint_every", size_field(&TrainConfig::checkpoint_every)},
      {"average_last_k", size_field(&TrainConfig::average_last_k)},
      {"eval_every", size_field(&TrainConfig::eval_every)},
      {"target_accuracy", real_field(&TrainConfig::target_accuracy)},
      {"seed", size_field(&TrainConfig::seed)},
  };
  return fields;
}

const std::map<std::string, Field<AnalysisOptions>>& analysis_fields() {
  static const std::map<std::string, Field<AnalysisOptions>> fields = {
      {"samples", size_field(&AnalysisOptions::samples)},
      {"src_len", size_field(&AnalysisOptions::src_len)},
      {"tgt_len", size_field(&AnalysisOptions::tgt_len)},
      {"format",
       {[](const AnalysisOptions& a) { return json(a.format); },
        [](AnalysisOptions& a, const json& v, const std::string& k) { a.format = as_string(v, k); }}},
  };
  return fields;
}

const std::map<std::string, Field<DecodeOptions>>& decode_fields() {
  static const std::map<std::string, Field<DecodeOptions>> fields = {
      {"mode",
       {[](const DecodeOptions& d) { return json(d.mode == DecodeMode::greedy ? "greedy" : "beam"); },
        [](DecodeOptions& d, const json& v, const std::string& k) { d.mode = parse_decode_mode(as_string(v, k)); }}},
      {"beam_size", size_field(&DecodeOptions::beam_size)},
      {"len_penalty", real_field(&DecodeOptions::len_penalty)},
      {"max_len", size_field(&DecodeOptions::max_len)},
  };
  return fields;
}

template <typename T>
json section_to_json(const T& value, const std::map<std::string, Field<T>>& fields) {
  json j = json::object();
  for (const auto& [key, f] : fields) j[key] = f.get(value);
  return j;
}

template <typename T>
void apply_section(T& value, const json& j, const std::string& section,
                   const std::map<std::string, Field<T>>& fields) {
  if (!j.is_object()) throw ConfigError(section + ": expected an object");
  for (const auto& [key, v] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) throw ConfigError(section + "." + key + ": unknown key");
    it->second.set(value, v, section + "." + key);
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed while writing " + path.string());
}

json load_document(const std::string& config_path, const std::vector<std::string>& overrides) {
  json doc = json::object();
  if (!config_path.empty()) {
    try {
      doc = json::parse(read_text(config_path));
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + config_path + ": invalid JSON: " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return doc;
}

std::string fmt_count(std::uint64_t n) {
  char buf[64];
  if (n >= 1000000000ULL) {
    std::snprintf(buf, sizeof buf, "%.3fB", static_cast<double>(n) / 1e9);
  } else if (n >= 1000000ULL) {
    std::snprintf(buf, sizeof buf, "%.2fM", static_cast<double>(n) / 1e6);
  } else {
    std::snprintf(buf, sizeof buf, "%.2fK", static_cast<double>(n) / 1e3);
  }
  return buf;
}

void print_table(std::ostream& out, const std::vector<CountEntry>& rows, std::uint64_t total) {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.module.size());
  for (const auto& r : rows) {
    if (r.count == 0) continue;
    out << r.module << std::string(width + 2 - r.module.size(), ' ') << r.count << "\n";
  }
  out << "total" << std::string(width - 3, ' ') << total << " (" << fmt_count(total) << ")\n";
}

// Report JSON with the effective run config echoed in.
json report_document(const AnalysisReport& report, const RunConfig& config) {
  json j = json::parse(emit_report(report, ReportFormat::json));
  j["effective_config"] = to_json(config);
  return j;
}

std::vector<Sample> analysis_samples(const RunConfig& config) {
  const Dataset data = make_task(config.task);
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < std::min(config.analysis.samples, data.eval.size()); ++i) {
    samples.push_back({data.eval[i].src, decoder_input(data.eval[i].tgt)});
  }
  return samples;
}

AnalysisReport analyse(const Model& model, const RunConfig& config, std::size_t jobs, const std::string& label) {
  AnalysisReport report = make_report(model.config, label);
  report.macs = count_macs(model.config, config.analysis.src_len, config.analysis.tgt_len);
  measure_behaviour(model, analysis_samples(config), report, jobs);
  return report;
}

json eval_json(const EvalResult& e) {
  return {{"loss", e.loss}, {"token_accuracy", e.token_accuracy}, {"tokens", e.tokens}};
}

json history_json(const std::vector<HistoryEntry>& history) {
  json rows = json::array();
  for (const auto& h : history) {
    rows.push_back({{"step", h.step},
                    {"lr", h.lr},
                    {"train_loss", h.train_loss},
                    {"train_loss_median", h.train_loss_median},
                    {"grad_norm", h.grad_norm},
                    {"eval_loss", h.eval_loss},
                    {"eval_accuracy", h.eval_accuracy}});
  }
  return rows;
}

std::vector<int> parse_tokens(const std::string& text) {
  std::vector<int> ids;
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream in(cleaned);
  std::string word;
  while (in >> word) {
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(word, &used));
      if (used != word.size()) throw std::invalid_argument(word);
    } catch (const std::exception&) {
      throw ConfigError("--src: '" + word + "' is not a token id");
    }
  }
  if (ids.empty()) throw ConfigError("--src: no token ids given");
  return ids;
}

std::string join(const std::vector<int>& ids) {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? " " : "") + std::to_string(ids[i]);
  return s;
}

// Per-architecture model config for compare: non-partialformer baselines
// run at H = d / d_k in both stacks.
ModelConfig arch_variant(const ModelConfig& base, Architecture arch) {
  ModelConfig c = base;
  c.arch = arch;
  if (arch != Architecture::partialformer && c.head_dim > 0) {
    c.encoder_heads = c.decoder_heads = c.model_dim / c.head_dim;
  }
  return c;
}

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::size_t jobs = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config");
  cmd->add_option("--set", c.overrides, "override a config field, e.g. --set model.d=64")->take_all();
  cmd->add_option("--out", c.out_dir, "directory for every artifact written");
  cmd->add_option("--jobs", c.jobs, "threads for per-sample evaluation")->check(CLI::PositiveNumber);
}

std::optional<fs::path> out_path(const Common& c) {
  if (c.out_dir.empty()) return std::nullopt;
  fs::create_directories(c.out_dir);
  return fs::path(c.out_dir);
}

int cmd_count_params(const Common& c, std::ostream& out) {
  const RunConfig config = run_config_from_json(load_document(c.config, c.overrides));
  const ParamBreakdown p = count_params(config.model);
  print_table(out, p.modules, p.total);
  if (auto dir = out_path(c)) {
    json j = {{"params", json::parse(emit_report(make_report(config.model), ReportFormat::json))["params"]},
              {"effective_config", to_json(config)}};
    write_text(*dir / "params.json", j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_count_macs(const Common& c, std::ostream& out) {
  const RunConfig config = run_config_from_json(load_document(c.config, c.overrides));
  const MacBreakdown m = count_macs(config.model, config.analysis.src_len, config.analysis.tgt_len);
  print_table(out, m.parts, m.total);
  out << "convention " << m.convention << " (src_len " << m.src_len << ", tgt_len " << m.tgt_len << ")\n";
  if (auto dir = out_path(c)) {
    AnalysisReport r = make_report(config.model);
    r.macs = m;
    json j = {{"macs", json::parse(emit_report(r, ReportFormat::json))["macs"]}, {"effective_config", to_json(config)}};
    write_text(*dir / "macs.json", j.dump(2) + "\n");
  }
  return kExitOk;
}

void write_report(const fs::path& dir, const std::string& stem, const AnalysisReport& report,
                  const RunConfig& config, const std::optional<EvalResult>& eval) {
  if (config.analysis.format == "csv") {
    write_text(dir / (stem + ".csv"), emit_report(report, ReportFormat::csv));
    json side = {{"effective_config", to_json(config)}};
    if (eval) side["evaluation"] = eval_json(*eval);
    write_text(dir / (stem + ".config.json"), side.dump(2) + "\n");
    return;
  }
  json j = report_document(report, config);
  if (eval) j["evaluation"] = eval_json(*eval);
  write_text(dir / (stem + ".json"), j.dump(2) + "\n");
}

void print_summary(std::ostream& out, const AnalysisReport& r, const std::optional<EvalResult>& eval) {
  out << "params " << r.params.total << " (" << fmt_count(r.params.total) << ")";
  if (r.macs) out << ", MACs " << r.macs->total << " (" << fmt_count(r.macs->total) << ")";
  out << "\n";
  if (eval) out << "eval token accuracy " << eval->token_accuracy << ", loss " << eval->loss << "\n";
  const auto d = mean_head_diversity(r);
  out << "mean D_output " << (d ? std::to_string(*d) : std::string("n/a")) << " over " << r.samples << " samples\n";
}

struct TrainOutcome {
  TrainResult result;
  EvalResult eval;
  AnalysisReport report;
};

TrainOutcome train_and_analyse(const RunConfig& config, const std::optional<fs::path>& dir, std::size_t jobs,
                               std::ostream& out, const std::string& label) {
  TrainResult result = train(config.model, config.task, config.train, dir);
  for (const auto& h : result.history) {
    char line[256];
    std::snprintf(line, sizeof line, "step %zu lr %.3e loss %.4f eval_loss %.4f eval_acc %.4f\n", h.step, h.lr,
                  h.train_loss, h.eval_loss, h.eval_accuracy);
    out << line;
  }
  const Dataset data = make_task(config.task);
  EvalResult eval = evaluate(result.model, data.eval, jobs);
  AnalysisReport report = analyse(result.model, config, jobs, label);
  if (dir) {
    write_text(*dir / "config.json", to_json(config).dump(2) + "\n");
    write_text(*dir / "history.csv", history_csv(result.history));
    write_text(*dir / "history.json", history_json(result.history).dump(2) + "\n");
    write_report(*dir, "report", report, config, eval);
  }
  return {std::move(result), eval, std::move(report)};
}

int cmd_train(const Common& c, std::ostream& out) {
  const RunConfig config = run_config_from_json(load_document(c.config, c.overrides));
  const auto dir = out_path(c);
  const TrainOutcome t = train_and_analyse(config, dir, c.jobs, out, to_string(config.model.arch));
  out << "steps " << t.result.steps_run << (t.result.reached_target ? " (target reached)" : "") << "\n";
  print_summary(out, t.report, t.eval);
  return kExitOk;
}

int cmd_analyze(const Common& c, const std::string& checkpoint, std::ostream& out) {
  RunConfig config = run_config_from_json(load_document(c.config, c.overrides));
  std::optional<Model> model;
  if (!checkpoint.empty()) {
    model.emplace(load_model(checkpoint));
    config.model = model->config;
    config.validate();
  } else {
    model.emplace(build_model(config.model));
  }
  const Dataset data = make_task(config.task);
  std::optional<EvalResult> eval;
  if (config.model.decoder_layers > 0) eval = evaluate(*model, data.eval, c.jobs);
  const AnalysisReport report = analyse(*model, config, c.jobs, to_string(config.model.arch));
  print_summary(out, report, eval);
  if (auto dir = out_path(c)) write_report(*dir, "report", report, config, eval);
  return kExitOk;
}

int cmd_decode(const Common& c, const std::string& checkpoint, const std::string& src, std::ostream& out) {
  RunConfig config = run_config_from_json(load_document(c.config, c.overrides));
  const Model model = load_model(checkpoint);
  config.model = model.config;
  config.validate();
  std::vector<Example> inputs;
  if (!src.empty()) {
    inputs.push_back({parse_tokens(src), {}});
  } else {
    const Dataset data = make_task(config.task);
    inputs.assign(data.eval.begin(), data.eval.begin() + static_cast<std::ptrdiff_t>(
                                                          std::min(config.analysis.samples, data.eval.size())));
  }
  json rows = json::array();
  std::size_t exact = 0;
  for (const auto& ex : inputs) {
    const Hypothesis h = decode(model, ex.src, config.decode);
    std::vector<int> body = h.tokens;
    if (!h.truncated && !body.empty()) body.pop_back();
    const bool has_ref = !ex.tgt.empty();
    exact += has_ref && body == ex.tgt;
    out << join(ex.src) << " -> " << join(h.tokens) << " score " << h.score << (h.truncated ? " (truncated)" : "")
        << "\n";
    json row = {{"src", ex.src},
                {"tokens", h.tokens},
                {"log_prob", h.log_prob},
                {"score", h.score},
                {"truncated", h.truncated}};
    if (has_ref) row["reference"] = ex.tgt;
    rows.push_back(row);
  }
  if (src.empty()) out << "exact match " << exact << "/" << inputs.size() << "\n";
  if (auto dir = out_path(c)) {
    json j = {{"hypotheses", rows}, {"effective_config", to_json(config)}};
    if (src.empty()) j["exact_match"] = static_cast<double>(exact) / static_cast<double>(inputs.size());
    write_text(*dir / "decode.json", j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_compare(const Common& c, std::ostream& out) {
  const RunConfig base = run_config_from_json(load_document(c.config, c.overrides));
  const Architecture archs[] = {Architecture::vanilla, Architecture::partialformer, Architecture::vanilla_pgffn};
  std::vector<RunConfig> configs;
  for (Architecture arch : archs) {
    RunConfig rc = base;
    rc.model = arch_variant(base.model, arch);
    rc.validate();
    configs.push_back(rc);
  }
  const auto dir = out_path(c);
  json runs = json::array();
  std::string csv;
  char line[512];
  std::snprintf(line, sizeof line, "%-14s %12s %12s %7s %9s %10s %10s\n", "arch", "params", "MACs", "steps",
                "eval_acc", "D_output", "token_unif");
  std::string table = line;
  for (const RunConfig& rc : configs) {
    const std::string name = to_string(rc.model.arch);
    out << "== " << name << "\n";
    std::optional<fs::path> sub;
    if (dir) {
      sub = *dir / name;
      fs::create_directories(*sub);
    }
    const TrainOutcome t = train_and_analyse(rc, sub, c.jobs, out, name);
    json run = report_document(t.report, rc);
    run["evaluation"] = eval_json(t.eval);
    run["steps_run"] = t.result.steps_run;
    runs.push_back(run);
    double tu = 0.0;
    std::size_t tu_n = 0;
    for (const auto& l : t.report.layers) {
      if (l.token_uniformity) {
        tu += *l.token_uniformity;
        ++tu_n;
      }
    }
    const auto d = mean_head_diversity(t.report);
    std::snprintf(line, sizeof line, "%-14s %12s %12s %7zu %9.4f %10.6f %10.6f\n", name.c_str(),
                  fmt_count(t.report.params.total).c_str(), fmt_count(t.report.macs->total).c_str(),
                  t.result.steps_run, t.eval.token_accuracy, d.value_or(NAN), tu_n ? tu / tu_n : NAN);
    table += line;
    std::istringstream rows(emit_report(t.report, ReportFormat::csv));
    std::string row;
    bool header = true;
    while (std::getline(rows, row)) {
      if (row.empty()) continue;
      if (header) {
        if (csv.empty()) csv = "arch," + row + "\n";
        header = false;
        continue;
      }
      csv += name + "," + row + "\n";
    }
  }
  out << table;
  if (dir) {
    json j = {{"effective_config", to_json(base)}, {"runs", runs}};
    write_text(*dir / "compare.json", j.dump(2) + "\n");
    write_text(*dir / "compare.csv", csv);
    write_text(*dir / "compare.txt", table);
  }
  return kExitOk;
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  task.validate(model.max_len);
  if (task.vocab_size > model.vocab_size) {
    throw ConfigError("task.vocab_size: " + std::to_string(task.vocab_size) + " exceeds model.vocab_size " +
                      std::to_string(model.vocab_size));
  }
  train.validate();
  if (train.eval_every < 1) throw ConfigError("train.eval_every: must be at least 1");
  if (!(train.label_smoothing >= 0.0 && train.label_smoothing < 1.0)) {
    throw ConfigError("train.label_smoothing: must lie in [0, 1)");
  }
  if (train.batch_tokens < 1) throw ConfigError("train.batch_tokens: must be at least 1");
  if (analysis.samples < 1) throw ConfigError("analysis.samples: must be at least 1");
  if (analysis.src_len < 1) throw ConfigError("analysis.src_len: must be at least 1");
  if (analysis.tgt_len < 1) throw ConfigError("analysis.tgt_len: must be at least 1");
  if (analysis.format != "json" && analysis.format != "csv") {
    throw ConfigError("analysis.format: unknown format '" + analysis.format + "' (expected json or csv)");
  }
  if (decode.beam_size < 1) throw ConfigError("decode.beam_size: must be at least 1");
  if (decode.max_len < 1) throw ConfigError("decode.max_len: must be at least 1");
}

bool RunConfig::operator==(const RunConfig& o) const { return to_json(*this) == to_json(o); }

json to_json(const RunConfig& c) {
  return {{"model", model_config_to_json(c.model)},
          {"task", section_to_json(c.task, task_fields())},
          {"train", section_to_json(c.train, train_fields())},
          {"analysis", section_to_json(c.analysis, analysis_fields())},
          {"decode", section_to_json(c.decode, decode_fields())}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  for (const auto& [section, body] : j.items()) {
    if (section == "model") {
      apply_model_config_json(c.model, body);
    } else if (section == "task") {
      apply_section(c.task, body, "task", task_fields());
    } else if (section == "train") {
      apply_section(c.train, body, "train", train_fields());
    } else if (section == "analysis") {
      apply_section(c.analysis, body, "analysis", analysis_fields());
    } else if (section == "decode") {
      apply_section(c.decode, body, "decode", decode_fields());
    } else {
      throw ConfigError(section + ": unknown config section (expected model, task, train, analysis or decode)");
    }
  }
  c.validate();
  return c;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const std::string key(assignment.substr(0, eq));
  const auto dot = key.find('.');
  if (eq == std::string_view::npos || dot == std::string::npos || dot == 0 || dot + 1 == key.size()) {
    throw ConfigError("--set " + std::string(assignment) + ": expected section.key=value");
  }
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  json& section = doc[key.substr(0, dot)];
  if (section.is_null()) section = json::object();
  if (!section.is_object()) throw ConfigError(key.substr(0, dot) + ": expected an object");
  section[key.substr(dot + 1)] = value;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PartialFormer reference implementation", "partialformer"};
  app.require_subcommand(1);
  Common common;
  std::string checkpoint, src;

  auto* train_cmd = app.add_subcommand("train", "train on a synthetic task and analyse the result");
  auto* analyze_cmd = app.add_subcommand("analyze", "budgets and behavioural metrics of a model");
  auto* params_cmd = app.add_subcommand("count-params", "closed-form parameter count per module");
  auto* macs_cmd = app.add_subcommand("count-macs", "closed-form MAC count per module");
  auto* decode_cmd = app.add_subcommand("decode", "greedy or beam decoding from a checkpoint");
  auto* compare_cmd = app.add_subcommand("compare", "train and analyse vanilla, partialformer and vanilla_pgffn");
  for (auto* cmd : {train_cmd, analyze_cmd, params_cmd, macs_cmd, decode_cmd, compare_cmd}) add_common(cmd, common);
  analyze_cmd->add_option("--checkpoint", checkpoint, "analyse this checkpoint instead of a fresh model");
  decode_cmd->add_option("--checkpoint", checkpoint, "model to decode with")->required();
  decode_cmd->add_option("--src", src, "source token ids; default decodes task eval examples");

  const std::vector<std::string> known = {"train", "analyze", "count-params", "count-macs", "decode", "compare"};
  if (!args.empty() && !args[0].starts_with("-") &&
      std::find(known.begin(), known.end(), args[0]) == known.end()) {
    err << "error: unknown subcommand '" << args[0] << "'\n" << app.help();
    return kExitConfig;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(common, out);
    if (analyze_cmd->parsed()) return cmd_analyze(common, checkpoint, out);
    if (params_cmd->parsed()) return cmd_count_params(common, out);
    if (macs_cmd->parsed()) return cmd_count_macs(common, out);
    if (decode_cmd->parsed()) return cmd_decode(common, checkpoint, src, out);
    if (compare_cmd->parsed()) return cmd_compare(common, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace pf::cli
