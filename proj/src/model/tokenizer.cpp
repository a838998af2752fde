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

#include "docstream/model/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"

namespace docstream {

namespace {

constexpr std::array<std::string_view, kNumSpecials> kSpecials = {
    special::kPad, special::kBos,      special::kEos,   special::kUnk,
    special::kSep, special::kStartEnt, special::kEndEnt};

bool is_ascii_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u) != 0;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (is_space(c)) {
      flush();
      ++i;
      continue;
    }
    if (c == '[') {
      bool matched = false;
      for (auto sp : kSpecials) {
        if (text.substr(i, sp.size()) == sp) {
          flush();
          out.emplace_back(sp);
          i += sp.size();
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    if (is_ascii_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      word += c;
    }
    ++i;
  }
  flush();
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

Vocabulary::Vocabulary() {
  for (auto sp : kSpecials) {
    ids_.emplace(std::string(sp), static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(sp);
  }
}

void Vocabulary::add_text(std::string_view text) {
  auto toks = tokenize_words(text);
  add_tokens(toks);
}

void Vocabulary::add_tokens(std::span<const std::string> tokens) {
  for (const auto& t : tokens) {
    if (!ids_.contains(t)) pending_.push_back(t);
  }
}

void Vocabulary::finalize() {
  std::set<std::string> fresh(pending_.begin(), pending_.end());
  pending_.clear();
  for (const auto& t : fresh) {
    if (ids_.contains(t)) continue;
    ids_.emplace(t, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(t);
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return ids_.contains(std::string(token));
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  auto toks = tokenize_words(text);
  return encode_tokens(toks);
}

std::vector<TokenId> Vocabulary::encode_tokens(std::span<const std::string> tokens) const {
  std::vector<TokenId> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId t : ids) {
    if (!out.empty()) out += ' ';
    out += token(t);
  }
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::string body;
  for (const auto& t : tokens_) {
    body += t;
    body += '\n';
  }
  write_file_atomic(path, body);
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  Vocabulary v;
  std::size_t expected = 0;
  for_each_line(path, [&](std::string_view line, std::size_t n) {
    if (expected < kNumSpecials) {
      if (line != kSpecials[expected]) {
        throw ParseError("vocabulary must start with the special tokens", n);
      }
    } else {
      if (v.ids_.contains(std::string(line))) throw ParseError("duplicate token", n);
      v.ids_.emplace(std::string(line), static_cast<TokenId>(v.tokens_.size()));
      v.tokens_.emplace_back(line);
    }
    ++expected;
  });
  return v;
}

}  // namespace docstream
