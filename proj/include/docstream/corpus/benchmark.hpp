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
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "docstream/corpus/corpus.hpp"

namespace docstream {

struct QueryExample {
  std::string query_id;
  std::string dataset;
  TaskId task = TaskId::fact_checking;
  std::string query_text;
  std::vector<Docid> provenance;

  bool operator==(const QueryExample&) const = default;
};

// Validates dataset/task consistency and non-empty provenance.
std::vector<QueryExample> load_queries(const std::filesystem::path& path);
void save_queries(const std::vector<QueryExample>& queries,
                  const std::filesystem::path& path);

using Partitions = std::vector<std::vector<Docid>>;

// D_0 takes round(base_fraction * N) documents drawn uniformly without
// replacement; the rest is dealt into T parts whose sizes differ by at
// most one, extras going to the lowest session indices.
Partitions split_sessions(const Corpus& corpus, int T, double base_fraction,
                          std::uint64_t seed);

// Session at which every provenance document is available (max partition
// index), or -1 when some provenance document is in no partition.
int availability_session(const QueryExample& ex, const Partitions& parts);

// Examples whose provenance is inside D_0..D_i and, for i >= 1, was not
// already inside D_0..D_{i-1} (those went to an earlier session).
std::vector<QueryExample> filter_examples(const std::vector<QueryExample>& examples,
                                          const Partitions& parts, int session);

struct SessionPlan {
  int T = 0;
  double base_fraction = 0.0;
  std::uint64_t seed = 0;
  Partitions partitions;
  std::vector<QueryExample> train_pairs_r0;
  // (session, dataset) -> examples
  std::map<std::pair<int, std::string>, std::vector<QueryExample>> test_sets;

  std::vector<Docid> pool(int session) const;
  std::vector<QueryExample> test_queries(int session) const;
  std::vector<std::string> datasets() const;
};

SessionPlan build_session_plan(const Corpus& corpus,
                               const std::vector<QueryExample>& train,
                               const std::vector<QueryExample>& dev, int T,
                               double base_fraction, std::uint64_t seed);

// Directory layout: plan.json, partitions/d<t>.txt, r0.jsonl, q<i>.jsonl.
void save_session_plan(const SessionPlan& plan, const std::filesystem::path& dir);
SessionPlan load_session_plan(const std::filesystem::path& dir);

}  // namespace docstream
