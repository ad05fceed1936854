// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0

#include "partialformer/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "partialformer/errors.hpp"
#include "parallel.hpp"

namespace pf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::size_t argmax_row(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

// Ranking used for finished hypotheses: score, then log-prob, then tokens.
bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

Hypothesis greedy_decode(StepScorer& scorer, const DecodeOptions& options) {
  Hypothesis h;
  while (h.tokens.size() < options.max_len) {
    const std::vector<double> lp = scorer.next_log_probs(h.tokens);
    const std::size_t best = argmax_row(lp);
    h.tokens.push_back(static_cast<int>(best));
    h.log_prob += lp[best];
    if (static_cast<int>(best) == scorer.eos()) break;
  }
  h.truncated = h.tokens.empty() || h.tokens.back() != scorer.eos();
  h.score = hypothesis_score(h.log_prob, h.tokens.size(), options.len_penalty);
  return h;
}

}  // namespace

TaskKind parse_task_kind(std::string_view tag) {
  if (tag == "copy") return TaskKind::copy;
  if (tag == "reverse") return TaskKind::reverse;
  if (tag == "sort") return TaskKind::sort;
  throw ConfigError("task.kind: unknown task '" + std::string(tag) + "' (expected copy, reverse or sort)");
}

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::copy:
      return "copy";
    case TaskKind::reverse:
      return "reverse";
    case TaskKind::sort:
      return "sort";
  }
  return "copy";
}

void TaskSpec::validate(std::size_t model_max_len) const {
  if (vocab_size < 5) throw ConfigError("task.vocab_size: must be at least 5 (4 reserved ids plus one task token)");
  if (min_len < 2) throw ConfigError("task.min_len: must be at least 2");
  if (min_len > max_len) throw ConfigError("task.min_len: must not exceed task.max_len");
  if (max_len + 1 > model_max_len) {
    throw ConfigError("task.max_len: " + std::to_string(max_len) + " plus bos/eos exceeds model max_len " +
                      std::to_string(model_max_len));
  }
}

std::vector<int> task_target(TaskKind kind, std::span<const int> src) {
  std::vector<int> tgt(src.begin(), src.end());
  if (kind == TaskKind::reverse) std::reverse(tgt.begin(), tgt.end());
  if (kind == TaskKind::sort) std::sort(tgt.begin(), tgt.end());
  return tgt;
}

Dataset make_task(const TaskSpec& spec) {
  Rng rng(spec.seed);
  const std::size_t span = spec.vocab_size - kFirstTaskToken;
  auto sample = [&]() {
    Example e;
    const std::size_t len = spec.min_len + rng.below(spec.max_len - spec.min_len + 1);
    for (std::size_t i = 0; i < len; ++i) e.src.push_back(kFirstTaskToken + static_cast<int>(rng.below(span)));
    e.tgt = task_target(spec.kind, e.src);
    return e;
  };
  Dataset d;
  for (std::size_t i = 0; i < spec.n_train; ++i) d.train.push_back(sample());
  for (std::size_t i = 0; i < spec.n_eval; ++i) d.eval.push_back(sample());
  return d;
}

std::vector<int> decoder_input(std::span<const int> tgt) {
  std::vector<int> out{kBos};
  out.insert(out.end(), tgt.begin(), tgt.end());
  return out;
}

std::vector<int> decoder_output(std::span<const int> tgt) {
  std::vector<int> out(tgt.begin(), tgt.end());
  out.push_back(kEos);
  return out;
}

Tensor label_smoothed_ce(const Tensor& logits, std::span<const int> targets, double eps, int pad) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size()) {
    throw DimensionError("label_smoothed_ce: logits " + shape_str(logits.shape()) + " vs " +
                         std::to_string(targets.size()) + " targets");
  }
  if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("label_smoothing: must lie in [0, 1)");
  const std::size_t t = logits.dim(0), v = logits.dim(1);
  std::vector<double> weights(t * v, 0.0);
  std::size_t active = 0;
  for (std::size_t i = 0; i < t; ++i) {
    const int y = targets[i];
    if (y == pad) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= v) {
      throw InputError("label_smoothed_ce: target " + std::to_string(y) + " outside vocabulary");
    }
    ++active;
    for (std::size_t c = 0; c < v; ++c) weights[i * v + c] = eps / static_cast<double>(v);
    weights[i * v + static_cast<std::size_t>(y)] += 1.0 - eps;
  }
  if (active == 0) return Tensor::scalar(0.0);
  Tensor w = Tensor::from_data({t, v}, std::move(weights));
  return scale(sum(mul(log_softmax_rows(logits), w)), -1.0 / static_cast<double>(active));
}

void TrainConfig::validate() const {
  if (warmup_steps < 1) throw ConfigError("train.warmup_steps: must be at least 1");
  if (total_steps > 0 && total_steps < warmup_steps) {
    throw ConfigError("train.total_steps: must be at least train.warmup_steps (or 0)");
  }
  if (!(lr_peak > 0.0)) throw ConfigError("train.lr_peak: must be positive");
  if (!(lr_init >= 0.0)) throw ConfigError("train.lr_init: must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("train.beta1: must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2: must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps: must be positive");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) throw ConfigError("train.label_smoothing: must lie in [0, 1)");
  if (batch_tokens < 1) throw ConfigError("train.batch_tokens: must be at least 1");
  if (!(clip_norm >= 0.0)) throw ConfigError("train.clip_norm: must be non-negative");
  if (average_last_k < 1) throw ConfigError("train.average_last_k: must be at least 1");
  if (eval_every < 1) throw ConfigError("train.eval_every: must be at least 1");
  if (!(target_accuracy >= 0.0 && target_accuracy <= 1.0)) {
    throw ConfigError("train.target_accuracy: must lie in [0, 1]");
  }
}

double lr_at(std::size_t step, const TrainConfig& c) {
  if (step < 1) throw UsageError("lr_at: step must be at least 1");
  const double s = static_cast<double>(step), w = static_cast<double>(c.warmup_steps);
  if (step <= c.warmup_steps) return c.lr_init + (c.lr_peak - c.lr_init) * s / w;
  return c.lr_peak * std::sqrt(w / s);
}

double gradient_norm(const ParameterRegistry& registry) {
  double ss = 0.0;
  for (const auto& e : registry.entries()) {
    if (!e.tensor.has_grad()) continue;
    for (double g : e.tensor.grad()) ss += g * g;
  }
  return std::sqrt(ss);
}

double clip_gradients(ParameterRegistry& registry, double max_norm) {
  const double norm = gradient_norm(registry);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (const auto& e : registry.entries()) {
      if (!e.tensor.has_grad()) continue;
      for (double& g : e.tensor.node()->grad) g *= factor;
    }
  }
  return norm;
}

void Adam::step(ParameterRegistry& registry, double lr) {
  const auto& entries = registry.entries();
  if (m_.empty()) {
    for (const auto& e : entries) {
      m_.emplace_back(e.tensor.numel(), 0.0);
      v_.emplace_back(e.tensor.numel(), 0.0);
    }
  }
  if (m_.size() != entries.size()) throw UsageError("Adam: registry changed size between steps");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor p = entries[i].tensor;
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps_);
    }
  }
}

EvalResult evaluate(const Model& model, const std::vector<Example>& examples, std::size_t jobs) {
  std::vector<double> losses(examples.size());
  std::vector<std::size_t> hits(examples.size());
  detail::parallel_for(examples.size(), jobs, [&](std::size_t i) {
    NoGradGuard no_grad;
    const Example& ex = examples[i];
    const std::vector<int> in = decoder_input(ex.tgt), out = decoder_output(ex.tgt);
    Tensor logits = forward(model, ex.src, in);
    losses[i] = label_smoothed_ce(logits, out, 0.0).item() * static_cast<double>(out.size());
    const std::size_t v = logits.dim(1);
    auto data = logits.data();
    for (std::size_t t = 0; t < out.size(); ++t) {
      hits[i] += static_cast<int>(argmax_row(data.subspan(t * v, v))) == out[t];
    }
  });
  EvalResult r;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    loss += losses[i];
    correct += hits[i];
    r.tokens += examples[i].tgt.size() + 1;
  }
  if (r.tokens) {
    r.loss = loss / static_cast<double>(r.tokens);
    r.token_accuracy = static_cast<double>(correct) / static_cast<double>(r.tokens);
  }
  return r;
}

TrainResult train(const ModelConfig& model_config, const TaskSpec& task, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& out_dir) {
  model_config.validate();
  config.validate();
  task.validate(model_config.max_len);
  if (task.vocab_size > model_config.vocab_size) {
    throw ConfigError("task.vocab_size: exceeds model vocab_size " + std::to_string(model_config.vocab_size));
  }
  if (model_config.decoder_layers == 0) throw ConfigError("M: training needs a decoder (M >= 1)");
  if (out_dir) std::filesystem::create_directories(*out_dir);

  TrainResult result{build_model(model_config), {}, 0, false, {}, std::nullopt, std::nullopt};
  Model& model = result.model;
  const Dataset data = make_task(task);
  Rng rng(config.seed);
  Adam adam(config.beta1, config.beta2, config.adam_eps);

  std::vector<std::size_t> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  auto next_example = [&]() -> const Example& {
    if (cursor == order.size()) {
      for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
      cursor = 0;
    }
    return data.train[order[cursor++]];
  };

  std::vector<double> interval_losses;
  double last_norm = 0.0;
  auto write_ckpt = [&](const std::string& name, std::size_t step) {
    const auto path = *out_dir / name;
    save_model(path, model, step);
    return path;
  };

  for (std::size_t step = 1; step <= config.total_steps; ++step) {
    std::vector<const Example*> batch;
    std::size_t tokens = 0;
    while (tokens < config.batch_tokens) {
      const Example& ex = next_example();
      batch.push_back(&ex);
      tokens += ex.tgt.size() + 1;
    }
    model.registry.zero_grad();
    double step_loss = 0.0;
    ForwardOptions options;
    options.training = true;
    options.rng = &rng;
    for (const Example* ex : batch) {
      const std::vector<int> in = decoder_input(ex->tgt), out = decoder_output(ex->tgt);
      Tensor logits = forward(model, ex->src, in, options);
      const double share = static_cast<double>(out.size()) / static_cast<double>(tokens);
      Tensor loss = scale(label_smoothed_ce(logits, out, config.label_smoothing), share);
      step_loss += loss.item();
      backward(loss);
    }
    if (!std::isfinite(step_loss)) {
      std::string where;
      if (out_dir) where = "; snapshot written to " + write_ckpt("diverged.pfck", step).string();
      throw DivergenceError("loss became non-finite at step " + std::to_string(step) +
                            " (lr = " + std::to_string(lr_at(step, config)) +
                            ", last grad norm = " + std::to_string(last_norm) + ")" + where);
    }
    last_norm = clip_gradients(model.registry, config.clip_norm);
    const double lr = lr_at(step, config);
    adam.step(model.registry, lr);
    interval_losses.push_back(step_loss);
    result.steps_run = step;

    if (out_dir && config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      result.checkpoints.push_back(write_ckpt("checkpoint_" + std::to_string(step) + ".pfck", step));
    }
    if (step % config.eval_every == 0 || step == config.total_steps) {
      const EvalResult ev = evaluate(model, data.eval);
      HistoryEntry h;
      h.step = step;
      h.lr = lr;
      h.train_loss = std::accumulate(interval_losses.begin(), interval_losses.end(), 0.0) /
                     static_cast<double>(interval_losses.size());
      h.train_loss_median = median(interval_losses);
      h.grad_norm = last_norm;
      h.eval_loss = ev.loss;
      h.eval_accuracy = ev.token_accuracy;
      result.history.push_back(h);
      interval_losses.clear();
      if (config.target_accuracy > 0.0 && ev.token_accuracy > config.target_accuracy) {
        result.reached_target = true;
        break;
      }
    }
  }

  if (out_dir) {
    result.final_checkpoint = write_ckpt("final.pfck", result.steps_run);
    if (!result.checkpoints.empty()) {
      const std::size_t k = std::min(config.average_last_k, result.checkpoints.size());
      std::vector<std::filesystem::path> last(result.checkpoints.end() - static_cast<std::ptrdiff_t>(k),
                                              result.checkpoints.end());
      const auto path = *out_dir / "averaged.pfck";
      write_checkpoint(path, average_checkpoints(last));
      result.averaged_checkpoint = path;
    }
  }
  return result;
}

std::string history_csv(const std::vector<HistoryEntry>& history) {
  std::string out = "step,lr,train_loss,train_loss_median,grad_norm,eval_loss,eval_accuracy\n";
  char buf[256];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", h.step, h.lr, h.train_loss,
                  h.train_loss_median, h.grad_norm, h.eval_loss, h.eval_accuracy);
    out += buf;
  }
  return out;
}

Checkpoint average_checkpoints(const std::vector<Checkpoint>& cks) {
  if (cks.empty()) throw UsageError("average_checkpoints: no checkpoints given");
  Checkpoint avg = cks.front();
  for (std::size_t c = 1; c < cks.size(); ++c) {
    const auto& other = cks[c];
    const std::size_t n = std::max(avg.entries.size(), other.entries.size());
    for (std::size_t i = 0; i < n; ++i) {
      const bool in_a = i < avg.entries.size(), in_b = i < other.entries.size();
      if (!in_a || !in_b || avg.entries[i].path != other.entries[i].path ||
          avg.entries[i].shape != other.entries[i].shape) {
        const std::string path = in_a ? avg.entries[i].path : other.entries[i].path;
        throw UsageError("average_checkpoints: registries differ at '" + path + "' (checkpoint " +
                         std::to_string(c) + ")");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = avg.entries[i].values;
      const auto& src = other.entries[i].values;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    avg.step = std::max(avg.step, other.step);
  }
  const double inv = 1.0 / static_cast<double>(cks.size());
  for (auto& e : avg.entries) {
    for (double& v : e.values) v *= inv;
  }
  return avg;
}

Checkpoint average_checkpoints(const std::vector<std::filesystem::path>& paths) {
  std::vector<Checkpoint> cks;
  for (const auto& p : paths) cks.push_back(read_checkpoint(p));
  return average_checkpoints(cks);
}

ModelScorer::ModelScorer(const Model& model, std::span<const int> src) : model_(model) {
  NoGradGuard no_grad;
  encoded_ = encoder_forward(model, src);
}

std::vector<double> ModelScorer::next_log_probs(std::span<const int> prefix) {
  NoGradGuard no_grad;
  const std::vector<int> in = decoder_input(prefix);
  Tensor logits = decoder_forward(model_, in, encoded_);
  Tensor lp = log_softmax_rows(logits);
  const std::size_t v = lp.dim(1);
  auto row = lp.data().subspan((in.size() - 1) * v, v);
  std::vector<double> out(row.begin(), row.end());
  out[kPad] = kNegInf;
  out[kBos] = kNegInf;
  return out;
}

DecodeMode parse_decode_mode(std::string_view tag) {
  if (tag == "greedy") return DecodeMode::greedy;
  if (tag == "beam") return DecodeMode::beam;
  throw ConfigError("decode.mode: unknown mode '" + std::string(tag) + "' (expected greedy or beam)");
}

double hypothesis_score(double log_prob, std::size_t length, double alpha) {
  if (length == 0) return log_prob;
  return log_prob / std::pow(static_cast<double>(length), alpha);
}

Hypothesis decode(StepScorer& scorer, const DecodeOptions& options) {
  if (options.beam_size < 1) throw ConfigError("decode.beam_size: must be at least 1");
  if (options.max_len < 1) throw ConfigError("decode.max_len: must be at least 1");
  Hypothesis greedy = greedy_decode(scorer, options);
  if (options.mode == DecodeMode::greedy || options.beam_size == 1) return greedy;

  std::vector<Hypothesis> finished{greedy};
  std::vector<Hypothesis> live{Hypothesis{}};
  for (std::size_t step = 1; step <= options.max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> expansions;
    for (const Hypothesis& h : live) {
      const std::vector<double> lp = scorer.next_log_probs(h.tokens);
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        if (lp[tok] == kNegInf) continue;
        Hypothesis next = h;
        next.tokens.push_back(static_cast<int>(tok));
        next.log_prob += lp[tok];
        next.score = hypothesis_score(next.log_prob, next.tokens.size(), options.len_penalty);
        if (static_cast<int>(tok) == scorer.eos()) {
          finished.push_back(std::move(next));
        } else {
          expansions.push_back(std::move(next));
        }
      }
    }
    // Equal lengths within a step, so log-prob ranking equals score ranking.
    std::sort(expansions.begin(), expansions.end(), better);
    if (expansions.size() > options.beam_size) expansions.resize(options.beam_size);
    live = std::move(expansions);
    if (step == options.max_len) {
      for (Hypothesis& h : live) {
        h.truncated = true;
        finished.push_back(std::move(h));
      }
      live.clear();
    }
  }
  return *std::min_element(finished.begin(), finished.end(), better);
}

Hypothesis decode(const Model& model, std::span<const int> src, const DecodeOptions& options) {
  ModelScorer scorer(model, src);
  return decode(scorer, options);
}

}  // namespace pf
