/* Copyright 2026 The docstream Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docstream/corpus/benchmark.hpp"
#include "docstream/corpus/corpus.hpp"
#include "docstream/decoder/trie.hpp"
#include "docstream/model/optimizer.hpp"
#include "docstream/model/params.hpp"
#include "docstream/model/tokenizer.hpp"
#include "docstream/pseudoquery/detector.hpp"
#include "docstream/pseudoquery/generators.hpp"
#include "docstream/rehearsal/rehearsal.hpp"

namespace docstream {

enum class TrainMode {
  corpusbrainpp,
  direct,
  sequential,
  no_adapter_st,
  no_adapter_mt,
  ori_pt,
  random_rehearsal,
  no_rehearsal,
  individual,
};

std::string_view mode_name(TrainMode mode);
// Throws ValidationError listing the valid modes.
TrainMode parse_mode(std::string_view name);
bool mode_uses_adapters(TrainMode mode);

struct PhaseConfig {
  int epochs = 1;
  std::size_t max_steps = 0;  // 0: no cap beyond the epochs
  OptimizerConfig optimizer;
  // Overrides TrainerConfig::max_tokens_per_batch when non-zero.
  std::size_t max_tokens_per_batch = 0;
};

struct TrainerConfig {
  PhaseConfig pretrain{.epochs = 10, .max_steps = 0, .optimizer = {}, .max_tokens_per_batch = 0};
  PhaseConfig finetune{.epochs = 30, .max_steps = 0, .optimizer = {}, .max_tokens_per_batch = 0};
  PhaseConfig continual{.epochs = 1, .max_steps = 0, .optimizer = {}, .max_tokens_per_batch = 0};
  std::size_t max_tokens_per_batch = 512;
  std::size_t max_input_tokens = 64;
  // Target docid lists are cut after the last whole title that fits.
  std::size_t max_target_tokens = 15;
  double label_smoothing = 0.0;
  // Train the per-task adapters of a session concurrently.
  bool parallel_tasks = true;

  void validate() const;
};

struct TrainExample {
  std::vector<TokenId> input;
  std::vector<TokenId> target;  // [BOS] title ([SEP] title)* [EOS]

  bool operator==(const TrainExample&) const = default;
};

// Nullopt when no title fits the budget or a title has no tokens.
std::optional<TrainExample> make_example(const Vocabulary& vocab,
                                         const std::vector<std::string>& query_tokens,
                                         const std::vector<Docid>& targets,
                                         const TrainerConfig& cfg);

struct LogEntry {
  int session = 0;
  std::string phase;  // pretrain, finetune, continual
  std::string scope;  // backbone or task name
  std::size_t step = 0;
  double loss = 0.0;
};

struct PhaseStats {
  std::size_t steps = 0;
  std::vector<double> losses;  // per step, token-weighted batch mean
};

// Token-count batches over a per-epoch shuffle, AdamW on every unfrozen
// tensor the loss touches. Throws DivergenceError naming the step.
PhaseStats train_examples(ParameterStore& store, const ModelConfig& model,
                          const AdapterConfig& acfg, std::optional<TaskId> adapter,
                          const std::vector<TrainExample>& examples, const PhaseConfig& phase,
                          const TrainerConfig& cfg, std::uint64_t seed);

// Batches of example indices, each holding at most max_tokens input plus
// target tokens (a single longer example forms its own batch).
std::vector<std::vector<std::size_t>> make_batches(const std::vector<TrainExample>& examples,
                                                   const std::vector<std::size_t>& order,
                                                   std::size_t max_tokens);

enum class Phase { pretrained, finetuned, continual };

struct SessionState {
  int t = 0;
  Phase phase = Phase::pretrained;
  TrainMode mode = TrainMode::corpusbrainpp;
  ParameterStore params;
  // Separate backbones per task (no_adapter_st after session 0).
  std::map<TaskId, ParameterStore> task_params;
  DocidTrie trie;
  std::uint64_t seed = 0;
  std::vector<LogEntry> log;
  // Rehearsal exemplars used by the latest session and, for cluster-based
  // modes, the cluster model they came from. Not persisted.
  std::vector<Docid> exemplars;
  std::optional<ClusterModel> clusters;
};

// Shared, read-only inputs of a run.
struct TrainContext {
  const Corpus* corpus = nullptr;
  const SessionPlan* plan = nullptr;
  const Vocabulary* vocab = nullptr;
  const RelationDetector* detector = nullptr;
  ModelConfig model;
  AdapterConfig adapter;
  GeneratorSuite generators;
  TrainerConfig trainer;
  RehearsalConfig rehearsal;
  std::uint64_t seed = 0;

  void validate() const;
};

std::uint64_t session_seed(std::uint64_t run_seed, int t);

// Pseudo pairs of one objective over docs, converted to examples.
std::vector<TrainExample> objective_examples(const TrainContext& ctx,
                                             const std::vector<Docid>& docs, Objective objective,
                                             std::uint64_t seed);
// Golden query examples (datasets without a train split skipped).
std::vector<TrainExample> query_examples(const TrainContext& ctx,
                                         const std::vector<QueryExample>& queries);

// Fresh backbone trained with ISS/LPS/HIP on D_0; the trie holds D_0.
SessionState pretrain_backbone(const TrainContext& ctx);
// Multi-task training on R_0, then the backbone is frozen.
SessionState finetune_backbone(SessionState state, const TrainContext& ctx);
SessionState initial_phase(const TrainContext& ctx);

// Exemplar set D^_t for session t (empty for modes without rehearsal).
// random_rehearsal draws as many old documents as the cluster-based
// selection would have. clusters, when given, receives the cluster model.
std::vector<Docid> rehearsal_exemplars(const SessionState& prev, int t, TrainMode mode,
                                       const TrainContext& ctx,
                                       ClusterModel* clusters = nullptr);

// Adapter tensors of task at the start of session t: inherited from prev
// (t >= 2, except individual) or freshly initialised from the session seed.
ParameterStore initial_adapter(const SessionState& prev, int t, TrainMode mode, TaskId task,
                               const TrainContext& ctx);

// Learns session t from prev (session t - 1) according to mode.
SessionState continual_update(const SessionState& prev, int t, TrainMode mode,
                              const TrainContext& ctx);

}  // namespace docstream
