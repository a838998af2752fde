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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docstream/corpus/benchmark.hpp"
#include "docstream/decoder/beam.hpp"
#include "docstream/eval/metrics.hpp"
#include "docstream/model/params.hpp"
#include "docstream/model/tokenizer.hpp"

namespace docstream {

// Everything needed to answer queries with the model of one session.
// Queries of a task use per_task[task] when present, shared otherwise, and
// activate that task's adapter when the store holds one.
struct RetrievalModel {
  const ParameterStore* shared = nullptr;
  std::map<TaskId, const ParameterStore*> per_task;
  ModelConfig model;
  AdapterConfig adapter;
  const Vocabulary* vocab = nullptr;
  const DocidTrie* trie = nullptr;
  BeamConfig beam;
  std::size_t max_input_tokens = 64;

  const ParameterStore& store_for(TaskId task) const;
};

RankedResult retrieve(const RetrievalModel& rm, TaskId task, const std::string& query_text);

// One result per query, in input order; queries run in parallel.
std::vector<RankedResult> retrieve_all(const RetrievalModel& rm,
                                       const std::vector<QueryExample>& queries);

// Mean R-precision over queries; nullopt for an empty set.
std::optional<double> matrix_entry(const RetrievalModel& rm,
                                   const std::vector<QueryExample>& queries);

// Fills P[t][i][dataset] for every i <= t and every non-empty test set.
void evaluate_session(PerformanceMatrix& m, int t, const SessionPlan& plan,
                      const RetrievalModel& rm);

}  // namespace docstream
