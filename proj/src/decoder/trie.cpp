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

#include "docstream/decoder/trie.hpp"

#include <algorithm>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"

namespace docstream {

DocidTrie::DocidTrie() : nodes_(1) {}

bool DocidTrie::insert(const Docid& docid, std::span<const TokenId> tokens) {
  if (members_.contains(docid)) return false;
  if (tokens.empty()) throw ValidationError("title \"" + docid.str() + "\" has no tokens");
  std::vector<std::size_t> path{kRoot};
  for (TokenId t : tokens) {
    if (t == kEosId || t == kSepId || t == kBosId || t == kPadId) {
      throw ValidationError("title \"" + docid.str() + "\" contains a reserved token");
    }
    auto& children = nodes_[path.back()].children;
    auto it = children.find(t);
    if (it == children.end()) {
      nodes_.emplace_back();
      it = nodes_[path.back()].children.emplace(t, nodes_.size() - 1).first;
    }
    path.push_back(it->second);
  }
  Node& end = nodes_[path.back()];
  if (end.terminal) {
    throw ValidationError("titles \"" + end.terminal->str() + "\" and \"" + docid.str() +
                          "\" have the same token sequence");
  }
  end.terminal = docid;
  const std::size_t len = tokens.size();
  for (std::size_t j = 0; j < path.size(); ++j) {
    nodes_[path[j]].min_to_terminal = std::min(nodes_[path[j]].min_to_terminal, len - j);
  }
  members_.insert(docid);
  return true;
}

bool DocidTrie::insert(const Docid& docid, const Vocabulary& vocab) {
  const auto ids = vocab.encode(docid.str());
  return insert(docid, ids);
}

std::optional<std::size_t> DocidTrie::child(std::size_t node, TokenId token) const {
  const auto& children = nodes_[node].children;
  auto it = children.find(token);
  if (it == children.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> DocidTrie::walk(std::span<const TokenId> tokens) const {
  std::size_t n = kRoot;
  for (TokenId t : tokens) {
    const auto next = child(n, t);
    if (!next) return std::nullopt;
    n = *next;
  }
  return n;
}

void DocidTrie::save(const std::filesystem::path& path) const {
  std::string out;
  for (const Docid& d : members_) out += d.str() + "\n";
  write_file_atomic(path, out);
}

DocidTrie DocidTrie::load(const std::filesystem::path& path, const Vocabulary& vocab) {
  DocidTrie trie;
  for_each_line(path, [&](std::string_view line, std::size_t lineno) {
    try {
      trie.insert(Docid(std::string(line)), vocab);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), lineno);
    }
  });
  return trie;
}

void BeamConfig::validate() const {
  if (beam_width < 1) throw ValidationError("decode: beam_width must be >= 1");
  if (max_steps < 1) throw ValidationError("decode: max_steps must be >= 1");
}

AutomatonState advance(const DocidTrie& trie, std::span<const TokenId> prefix,
                       const BeamConfig& cfg) {
  AutomatonState st;
  for (TokenId t : prefix) {
    if (st.finished) throw Error("decoder: token after [EOS]");
    const bool at_terminal = trie.node(st.node).terminal.has_value();
    if (t == kEosId) {
      if (!at_terminal) throw Error("decoder: [EOS] inside a title");
      st.finished = true;
    } else if (t == kSepId) {
      if (!at_terminal || !cfg.allow_multi_docid) throw Error("decoder: unexpected [SEP]");
      st.node = DocidTrie::kRoot;
    } else {
      const auto next = trie.child(st.node, t);
      if (!next) throw Error("decoder: token " + std::to_string(t) + " leaves the prefix tree");
      st.node = *next;
    }
  }
  return st;
}

std::vector<TokenId> allowed_next(const DocidTrie& trie, std::span<const TokenId> prefix,
                                  const BeamConfig& cfg) {
  const AutomatonState st = advance(trie, prefix, cfg);
  std::vector<TokenId> out;
  if (st.finished) return out;
  const auto& n = trie.node(st.node);
  for (const auto& [tok, next] : n.children) out.push_back(tok);
  if (n.terminal) {
    out.push_back(kEosId);
    if (cfg.allow_multi_docid) out.push_back(kSepId);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<Docid> sequence_docids(const DocidTrie& trie, std::span<const TokenId> tokens) {
  std::vector<Docid> out;
  std::size_t n = DocidTrie::kRoot;
  bool valid = true;
  auto flush = [&] {
    if (valid && trie.node(n).terminal) out.push_back(*trie.node(n).terminal);
    n = DocidTrie::kRoot;
    valid = true;
  };
  for (TokenId t : tokens) {
    if (t == kEosId) break;
    if (t == kSepId) {
      flush();
      continue;
    }
    if (!valid) continue;
    const auto next = trie.child(n, t);
    if (next) {
      n = *next;
    } else {
      valid = false;
    }
  }
  flush();
  return out;
}

}  // namespace docstream
