// Copyright (c) 2026, The PartialFormer Authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic seq2seq tasks, label-smoothed cross-entropy, inverse-sqrt
// schedule, Adam, the training loop, checkpoint averaging and decoding.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "partialformer/checkpoint.hpp"
#include "partialformer/model.hpp"

namespace pf {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;
inline constexpr int kFirstTaskToken = 4;

enum class TaskKind { copy, reverse, sort };

TaskKind parse_task_kind(std::string_view tag);
std::string to_string(TaskKind kind);

struct TaskSpec {
  TaskKind kind = TaskKind::copy;
  std::size_t vocab_size = 32;
  std::size_t min_len = 2;
  std::size_t max_len = 16;
  std::size_t n_train = 4096;
  std::size_t n_eval = 256;
  std::uint64_t seed = 7;

  // model_max_len bounds the decoder input, which carries one extra token.
  void validate(std::size_t model_max_len) const;
  bool operator==(const TaskSpec&) const = default;
};

struct Example {
  std::vector<int> src;
  std::vector<int> tgt;  // without bos/eos
};

struct Dataset {
  std::vector<Example> train;
  std::vector<Example> eval;
};

// Target for one source under the task rule.
std::vector<int> task_target(TaskKind kind, std::span<const int> src);
Dataset make_task(const TaskSpec& spec);

// Decoder input [bos] + tgt and output tgt + [eos].
std::vector<int> decoder_input(std::span<const int> tgt);
std::vector<int> decoder_output(std::span<const int> tgt);

// (1 - eps) * -log p_y + eps * mean_v(-log p_v), averaged over positions
// whose target is not `pad`.
Tensor label_smoothed_ce(const Tensor& logits, std::span<const int> targets, double eps, int pad = kPad);

struct TrainConfig {
  double lr_peak = 2e-3;
  double lr_init = 1e-7;
  std::size_t warmup_steps = 200;
  std::size_t total_steps = 3000;
  double beta1 = 0.9;
  double beta2 = 0.997;
  double adam_eps = 1e-8;
  double label_smoothing = 0.1;
  std::size_t batch_tokens = 1024;
  double clip_norm = 1.0;  // 0 disables clipping
  std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::size_t average_last_k = 10;
  std::size_t eval_every = 100;
  // Stop once teacher-forced eval accuracy exceeds this; 0 disables.
  double target_accuracy = 0.0;
  std::uint64_t seed = 11;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Linear ramp from lr_init to lr_peak over warmup, then lr_peak*sqrt(warmup/step).
double lr_at(std::size_t step, const TrainConfig& config);

// Global L2 norm of all parameter gradients.
double gradient_norm(const ParameterRegistry& registry);
// Rescales gradients to max_norm when the global norm exceeds it; returns
// the pre-clipping norm.
double clip_gradients(ParameterRegistry& registry, double max_norm);

class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(ParameterRegistry& registry, double lr);
  std::size_t steps() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct EvalResult {
  double loss = 0.0;  // unsmoothed, per token
  double token_accuracy = 0.0;
  std::size_t tokens = 0;
};

// Teacher-forced evaluation with dropout off, on up to `jobs` threads. The
// result does not depend on `jobs`.
EvalResult evaluate(const Model& model, const std::vector<Example>& examples, std::size_t jobs = 1);

struct HistoryEntry {
  std::size_t step = 0;
  double lr = 0.0;
  double train_loss = 0.0;         // mean smoothed loss over the interval
  double train_loss_median = 0.0;  // median step loss over the interval
  double grad_norm = 0.0;          // last pre-clipping norm
  double eval_loss = 0.0;
  double eval_accuracy = 0.0;
  bool operator==(const HistoryEntry&) const = default;
};

struct TrainResult {
  Model model;
  std::vector<HistoryEntry> history;
  std::size_t steps_run = 0;
  bool reached_target = false;
  std::vector<std::filesystem::path> checkpoints;
  std::optional<std::filesystem::path> final_checkpoint;
  std::optional<std::filesystem::path> averaged_checkpoint;
};

// Deterministic given the three seeds. With out_dir set, periodic, final and
// averaged checkpoints are written there. A non-finite loss raises
// DivergenceError after writing a snapshot (when out_dir is set).
TrainResult train(const ModelConfig& model_config, const TaskSpec& task, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);

std::string history_csv(const std::vector<HistoryEntry>& history);

// Per-parameter arithmetic mean. Throws UsageError naming the first path
// where the registries differ.
Checkpoint average_checkpoints(const std::vector<Checkpoint>& checkpoints);
Checkpoint average_checkpoints(const std::vector<std::filesystem::path>& paths);

// Next-token log-probabilities given a prefix of generated tokens.
class StepScorer {
 public:
  virtual ~StepScorer() = default;
  virtual std::vector<double> next_log_probs(std::span<const int> prefix) = 0;
  virtual int eos() const = 0;
};

// Full-recompute decoding of one source: the encoder runs once, the decoder
// reruns the whole prefix every step. Pad and bos are never emitted.
class ModelScorer : public StepScorer {
 public:
  ModelScorer(const Model& model, std::span<const int> src);
  std::vector<double> next_log_probs(std::span<const int> prefix) override;
  int eos() const override { return kEos; }

 private:
  const Model& model_;
  EncoderOutput encoded_;
};

enum class DecodeMode { greedy, beam };

DecodeMode parse_decode_mode(std::string_view tag);

struct DecodeOptions {
  DecodeMode mode = DecodeMode::beam;
  std::size_t beam_size = 4;
  double len_penalty = 1.0;  // alpha
  std::size_t max_len = 32;
};

struct Hypothesis {
  std::vector<int> tokens;  // generated tokens, including a final eos if any
  double log_prob = 0.0;
  double score = 0.0;
  bool truncated = false;  // max_len reached without eos
};

// log_prob / len^alpha with len = number of generated tokens.
double hypothesis_score(double log_prob, std::size_t length, double alpha);

Hypothesis decode(StepScorer& scorer, const DecodeOptions& options);
Hypothesis decode(const Model& model, std::span<const int> src, const DecodeOptions& options);

}  // namespace pf
