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

#include "docstream/decoder/beam.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>

#include "docstream/common/error.hpp"

namespace docstream {

namespace {

struct Hyp {
  std::vector<TokenId> tokens;
  double score = 0.0;
  std::size_t node = DocidTrie::kRoot;
};

bool better(const Hyp& a, const Hyp& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

RankedResult beam_search(const NextTokenFn& next, const DocidTrie& trie, const BeamConfig& cfg) {
  cfg.validate();
  RankedResult result;
  if (trie.empty()) {
    spdlog::warn("beam search over an empty prefix tree");
    return result;
  }
  const std::size_t width = cfg.beam_width;
  std::vector<Hyp> live{Hyp{}};
  std::vector<Hyp> finished;

  for (std::size_t step = 0; step < cfg.max_steps && !live.empty(); ++step) {
    // Tokens still allowed after this one.
    const std::size_t remaining = cfg.max_steps - step - 1;
    std::vector<Hyp> cand;
    for (const Hyp& h : live) {
      const auto lp = next(h.tokens);
      const auto& n = trie.node(h.node);
      auto extend = [&](TokenId tok, std::size_t node) {
        if (static_cast<std::size_t>(tok) >= lp.size()) {
          throw Error("decoder: model vocabulary does not cover token " + std::to_string(tok));
        }
        Hyp c{h.tokens, h.score + lp[static_cast<std::size_t>(tok)], node};
        c.tokens.push_back(tok);
        if (tok == kEosId) {
          finished.push_back(std::move(c));
        } else {
          cand.push_back(std::move(c));
        }
      };
      for (const auto& [tok, child] : n.children) {
        // Reaching a terminal below child and emitting EOS.
        if (trie.node(child).min_to_terminal + 1 <= remaining) extend(tok, child);
      }
      if (n.terminal) {
        extend(kEosId, h.node);
        if (cfg.allow_multi_docid && trie.node(DocidTrie::kRoot).min_to_terminal + 1 <= remaining) {
          extend(kSepId, DocidTrie::kRoot);
        }
      }
    }
    std::sort(cand.begin(), cand.end(), better);
    if (cand.size() > width) cand.resize(width);
    live = std::move(cand);

    std::sort(finished.begin(), finished.end(), better);
    if (finished.size() > width) finished.resize(width);
    if (finished.size() == width && (live.empty() || finished.back().score >= live.front().score)) {
      break;
    }
  }

  std::sort(finished.begin(), finished.end(), better);
  if (finished.size() > width) finished.resize(width);
  if (finished.empty()) spdlog::warn("no hypothesis reached [EOS] within {} steps", cfg.max_steps);
  std::set<Docid> seen;
  for (Hyp& h : finished) {
    for (Docid& d : sequence_docids(trie, h.tokens)) {
      if (seen.insert(d).second) result.docids.push_back(std::move(d));
    }
    result.beams.push_back(Beam{std::move(h.tokens), h.score});
  }
  return result;
}

RankedResult decode_query(const Inference& model, std::span<const TokenId> query,
                          const DocidTrie& trie, const BeamConfig& cfg) {
  const Matrix memory = model.encode(query);
  return beam_search(
      [&](std::span<const TokenId> prefix) { return model.next_log_probs(memory, prefix); }, trie,
      cfg);
}

}  // namespace docstream
