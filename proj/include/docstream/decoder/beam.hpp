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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "docstream/decoder/trie.hpp"
#include "docstream/model/transformer.hpp"

namespace docstream {

// Log-probabilities over the vocabulary for the token following prefix
// (prefix excludes BOS).
using NextTokenFn = std::function<std::vector<double>(std::span<const TokenId> prefix)>;

struct Beam {
  std::vector<TokenId> tokens;  // ends with EOS
  double log_prob = 0.0;
};

struct RankedResult {
  std::string query_id;
  std::vector<Docid> docids;  // best first, duplicates removed
  std::vector<Beam> beams;    // best first
};

// Constrained beam search. Each step extends the live hypotheses by every
// allowed token that can still reach EOS within max_steps and keeps the
// best beam_width; hypotheses ending in EOS are set aside. Search stops
// once beam_width finished hypotheses all score at least the best live
// one. Equal scores are ordered by token sequence.
RankedResult beam_search(const NextTokenFn& next, const DocidTrie& trie, const BeamConfig& cfg);

// Binds an Inference model and a tokenised query into a NextTokenFn.
RankedResult decode_query(const Inference& model, std::span<const TokenId> query,
                          const DocidTrie& trie, const BeamConfig& cfg);

}  // namespace docstream
