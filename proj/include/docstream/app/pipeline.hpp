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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "docstream/app/config.hpp"
#include "docstream/corpus/benchmark.hpp"
#include "docstream/corpus/corpus.hpp"
#include "docstream/corpus/synthetic.hpp"
#include "docstream/eval/evaluate.hpp"
#include "docstream/eval/metrics.hpp"
#include "docstream/pseudoquery/detector.hpp"
#include "docstream/trainer/trainer.hpp"

namespace docstream {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Everything a run reads besides its configuration.
struct ExperimentInputs {
  Corpus corpus;
  SessionPlan plan;
  Vocabulary vocab;
  BowRelationDetector detector;
};

// Words of every document, title, anchor and benchmark query.
Vocabulary build_vocabulary(const Corpus& corpus, const SessionPlan& plan);
// Builds the vocabulary and trains the relation detector on R_0.
ExperimentInputs prepare_inputs(Corpus corpus, SessionPlan plan);
// The returned context points into inputs.
TrainContext make_context(const RunConfig& cfg, const ExperimentInputs& inputs);
// The returned model points into state and ctx.
RetrievalModel retrieval_model(const SessionState& state, const TrainContext& ctx,
                               const BeamConfig& beam);

// Called after session t was trained and evaluated.
using SessionHook = std::function<void(const SessionState&, const PerformanceMatrix&)>;

// Sessions first..last in memory. start, when given, is the state of
// session first - 1 and m already holds its rows; otherwise first must be 0.
void run_sessions(const RunConfig& cfg, const TrainContext& ctx, PerformanceMatrix& m,
                  int first, int last, std::optional<SessionState> start,
                  const SessionHook& hook = {});

// sessions/t<k>/: model.ckpt, model.<task>.ckpt (separate task backbones),
// trie.txt, vocab.txt, log.csv, exemplars.txt, manifest.json and, when
// asked for, clusters/.
void save_session(const SessionState& state, const std::filesystem::path& dir,
                  const RunConfig& cfg, const Vocabulary& vocab);

struct LoadedSession {
  SessionState state;
  Vocabulary vocab;
  ModelConfig model;
  AdapterConfig adapter;
  BeamConfig decode;
  std::size_t max_input_tokens = 0;
};
LoadedSession load_session(const std::filesystem::path& dir);

struct RunOptions {
  std::filesystem::path config_path;  // recorded in the manifest
  bool resume = false;
  int stop_after = -1;  // stop once this session is saved (-1: run all)
};

struct RunOutcome {
  PerformanceMatrix matrix;
  int last_session = -1;
  bool complete = false;
};

// File-backed run into cfg.paths.out: vocab.txt, sessions/, matrix.csv after
// every session, report.txt at the end and manifest.json at each session
// boundary. Resume refuses inputs whose fingerprints changed.
RunOutcome run_experiment(const RunConfig& cfg, const RunOptions& opts);

// Names of manifest artifacts that are missing or whose content changed.
std::vector<std::string> verify_run_manifest(const std::filesystem::path& out);

struct BenchmarkOptions {
  std::filesystem::path corpus;
  std::filesystem::path train_queries;  // with dev_queries; both empty: synthesize
  std::filesystem::path dev_queries;
  int T = 4;
  double base_fraction = 0.6;
  std::uint64_t seed = 1;
  SyntheticQueryConfig synthetic;
  std::filesystem::path out;
};

SessionPlan build_benchmark(const BenchmarkOptions& opts);

// Hash over the relative names and contents of every file below dir.
std::string directory_fingerprint(const std::filesystem::path& dir);

struct QueryHit {
  std::vector<Docid> docids;
  double log_prob = 0.0;
};

std::vector<QueryHit> query_session(const std::filesystem::path& session_dir, TaskId task,
                                    const std::string& text);
std::string format_hits(const std::vector<QueryHit>& hits);

// Text report of a finished (or partial) run directory.
std::string report_run(const std::filesystem::path& out);

}  // namespace docstream
