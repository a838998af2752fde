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

#include <compare>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "docstream/corpus/task.hpp"

namespace docstream {

// A document title used verbatim as the identifier the model emits.
class Docid {
 public:
  Docid() = default;
  // Throws ValidationError when empty or padded with whitespace.
  explicit Docid(std::string title);

  const std::string& str() const { return title_; }

  auto operator<=>(const Docid&) const = default;
  bool operator==(const Docid&) const = default;

 private:
  std::string title_;
};

struct Anchor {
  std::string surface_text;
  std::size_t paragraph_index = 0;
  std::size_t sentence_index = 0;
  // Half-open UTF-8 byte range inside the sentence.
  std::size_t start = 0;
  std::size_t end = 0;
  Docid target;
  bool dangling = false;

  bool operator==(const Anchor&) const = default;
};

struct Document {
  Docid docid;
  std::vector<std::vector<std::string>> paragraphs;
  std::vector<Anchor> anchors;

  std::size_t sentence_count() const;
  // Sentence by flat index across paragraphs.
  const std::string& sentence(std::size_t flat) const;
  // Flat index to (paragraph, sentence).
  std::pair<std::size_t, std::size_t> locate(std::size_t flat) const;

  bool operator==(const Document&) const = default;
};

class Corpus {
 public:
  Corpus() = default;
  // Validates structure and uniqueness, resolves anchors and records a
  // warning for each dangling one.
  explicit Corpus(std::vector<Document> docs);

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& documents() const { return docs_; }
  const Document& at(std::size_t i) const { return docs_.at(i); }
  const Document* find(const Docid& id) const;
  bool contains(const Docid& id) const { return find(id) != nullptr; }
  std::vector<Docid> docids() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

  bool operator==(const Corpus& other) const { return docs_ == other.docs_; }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> warnings_;
};

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
// One JSON object per document, same schema as the corpus file.
std::string document_to_jsonl(const Document& doc);

}  // namespace docstream

template <>
struct std::hash<docstream::Docid> {
  std::size_t operator()(const docstream::Docid& d) const noexcept {
    return std::hash<std::string>{}(d.str());
  }
};
