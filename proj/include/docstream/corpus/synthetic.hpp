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
#include <string>
#include <vector>

#include "docstream/corpus/benchmark.hpp"
#include "docstream/corpus/corpus.hpp"

namespace docstream {

struct SyntheticCorpusConfig {
  std::size_t num_docs = 64;
  std::size_t min_paragraphs = 1;
  std::size_t max_paragraphs = 2;
  std::size_t sentences_per_paragraph = 3;
  std::size_t min_sentence_words = 6;
  std::size_t max_sentence_words = 12;
  std::size_t keywords_per_doc = 4;
  std::size_t anchors_per_doc = 2;
  // Fraction of titles created by extending an existing title, so the
  // prefix tree has shared paths.
  double title_extension_rate = 0.15;
  std::uint64_t seed = 1;
};

// Seeded synthetic encyclopedia. Every document has distinctive keywords,
// one relation sentence and anchors to other documents.
Corpus make_synthetic_corpus(const SyntheticCorpusConfig& cfg);

struct SyntheticQueryConfig {
  // Per document and dataset, how many train and dev queries to emit.
  std::size_t train_per_doc = 1;
  std::size_t dev_per_doc = 1;
  std::vector<std::string> datasets;  // empty means all eleven
  std::uint64_t seed = 2;
};

struct SyntheticQueries {
  std::vector<QueryExample> train;
  std::vector<QueryExample> dev;
};

// Template-based stand-ins for the KILT train/dev sets. Datasets without a
// train split only get dev queries.
SyntheticQueries make_synthetic_queries(const Corpus& corpus,
                                        const SyntheticQueryConfig& cfg);

// Relation labels used by the synthetic slot-filling data with the cue word
// that signals each of them inside a sentence.
struct RelationCue {
  std::string label;
  std::string cue;
};
const std::vector<RelationCue>& synthetic_relations();

}  // namespace docstream
