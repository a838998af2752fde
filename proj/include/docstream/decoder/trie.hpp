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

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "docstream/corpus/corpus.hpp"
#include "docstream/model/tokenizer.hpp"

namespace docstream {

// Prefix tree over title token ids. Node 0 is the root.
class DocidTrie {
 public:
  struct Node {
    std::map<TokenId, std::size_t> children;
    std::optional<Docid> terminal;
    // Fewest tokens from this node to any terminal below it.
    std::size_t min_to_terminal = static_cast<std::size_t>(-1);
  };

  DocidTrie();

  // false when docid is already present. Throws ValidationError for an
  // empty token sequence or a sequence already claimed by another title.
  bool insert(const Docid& docid, std::span<const TokenId> tokens);
  bool insert(const Docid& docid, const Vocabulary& vocab);

  static constexpr std::size_t kRoot = 0;
  const Node& node(std::size_t id) const { return nodes_[id]; }
  std::optional<std::size_t> child(std::size_t node, TokenId token) const;
  // Node reached from the root by tokens, if any.
  std::optional<std::size_t> walk(std::span<const TokenId> tokens) const;

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  bool contains(const Docid& docid) const { return members_.contains(docid); }
  std::vector<Docid> members() const { return {members_.begin(), members_.end()}; }

  // Sorted member titles, one per line.
  void save(const std::filesystem::path& path) const;
  static DocidTrie load(const std::filesystem::path& path, const Vocabulary& vocab);

 private:
  std::vector<Node> nodes_;
  std::set<Docid> members_;
};

struct BeamConfig {
  std::size_t beam_width = 10;
  std::size_t max_steps = 15;
  bool allow_multi_docid = true;

  void validate() const;
};

// Decoding automaton position after a prefix.
struct AutomatonState {
  std::size_t node = DocidTrie::kRoot;
  bool finished = false;  // EOS consumed
};

// Throws Error when prefix leaves the automaton.
AutomatonState advance(const DocidTrie& trie, std::span<const TokenId> prefix,
                       const BeamConfig& cfg);
// Tokens allowed next, ascending: children of the current node, plus EOS
// (and SEP when allow_multi_docid) at a terminal. Nothing after EOS.
std::vector<TokenId> allowed_next(const DocidTrie& trie, std::span<const TokenId> prefix,
                                  const BeamConfig& cfg);
// Titles named by a finished or partial sequence, split at SEP.
std::vector<Docid> sequence_docids(const DocidTrie& trie, std::span<const TokenId> tokens);

}  // namespace docstream
