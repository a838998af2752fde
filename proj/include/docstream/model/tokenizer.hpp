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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace docstream {

namespace special {
inline constexpr std::string_view kPad = "[PAD]";
inline constexpr std::string_view kBos = "[BOS]";
inline constexpr std::string_view kEos = "[EOS]";
inline constexpr std::string_view kUnk = "[UNK]";
inline constexpr std::string_view kSep = "[SEP]";
inline constexpr std::string_view kStartEnt = "[START_ENT]";
inline constexpr std::string_view kEndEnt = "[END_ENT]";
}  // namespace special

using TokenId = int;

// Fixed ids of the special tokens; every vocabulary starts with them.
inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr TokenId kSepId = 4;
inline constexpr TokenId kStartEntId = 5;
inline constexpr TokenId kEndEntId = 6;
inline constexpr int kNumSpecials = 7;

// Whitespace split, then every ASCII punctuation character becomes its own
// token. Special token literals are kept whole.
std::vector<std::string> tokenize_words(std::string_view text);

std::string join_tokens(std::span<const std::string> tokens);

class Vocabulary {
 public:
  Vocabulary();

  // Adds the tokens of every text; ids of new words are assigned in sorted
  // order by finalize().
  void add_text(std::string_view text);
  void add_tokens(std::span<const std::string> tokens);
  void finalize();

  std::size_t size() const { return tokens_.size(); }
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  bool contains(std::string_view token) const;

  std::vector<TokenId> encode(std::string_view text) const;
  std::vector<TokenId> encode_tokens(std::span<const std::string> tokens) const;
  std::string decode(std::span<const TokenId> ids) const;

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<std::string> pending_;
};

}  // namespace docstream
