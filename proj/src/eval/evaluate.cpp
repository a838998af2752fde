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

#include "docstream/eval/evaluate.hpp"

#include <exception>

#include "docstream/common/error.hpp"
#include "docstream/pseudoquery/generators.hpp"

namespace docstream {

const ParameterStore& RetrievalModel::store_for(TaskId task) const {
  auto it = per_task.find(task);
  if (it != per_task.end()) return *it->second;
  if (shared == nullptr) throw Error("no parameters for task " + std::string(task_name(task)));
  return *shared;
}

RankedResult retrieve(const RetrievalModel& rm, TaskId task, const std::string& query_text) {
  if (rm.vocab == nullptr || rm.trie == nullptr) throw Error("retrieval model is incomplete");
  const ParameterStore& store = rm.store_for(task);
  const std::size_t limit = std::min(rm.max_input_tokens, rm.model.max_positions);
  const auto ids = encode_input(*rm.vocab, tokenize_words(query_text), limit);
  if (ids.empty()) return {};
  const Inference model(store, rm.model, rm.adapter, active_adapter(store, task));
  return decode_query(model, ids, *rm.trie, rm.beam);
}

std::vector<RankedResult> retrieve_all(const RetrievalModel& rm,
                                       const std::vector<QueryExample>& queries) {
  std::vector<RankedResult> out(queries.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    try {
      const auto& ex = queries[static_cast<std::size_t>(q)];
      out[static_cast<std::size_t>(q)] = retrieve(rm, ex.task, ex.query_text);
      out[static_cast<std::size_t>(q)].query_id = ex.query_id;
    } catch (...) {
#pragma omp critical(docstream_retrieve_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::optional<double> matrix_entry(const RetrievalModel& rm,
                                   const std::vector<QueryExample>& queries) {
  if (queries.empty()) return std::nullopt;
  const auto results = retrieve_all(rm, queries);
  double sum = 0.0;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    sum += r_precision(queries[q].provenance, results[q].docids);
  }
  return sum / static_cast<double>(queries.size());
}

void evaluate_session(PerformanceMatrix& m, int t, const SessionPlan& plan,
                      const RetrievalModel& rm) {
  for (const auto& [key, queries] : plan.test_sets) {
    const auto& [i, dataset] = key;
    if (i > t) continue;
    if (const auto v = matrix_entry(rm, queries)) m.set(t, i, dataset, *v);
  }
}

}  // namespace docstream
