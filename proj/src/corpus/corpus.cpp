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

#include "docstream/corpus/corpus.hpp"

#include <spdlog/spdlog.h>

#include <cctype>
#include <fstream>
#include <json.hpp>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"

namespace docstream {

using nlohmann::json;

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::string_view task_name(TaskId task) {
  switch (task) {
    case TaskId::fact_checking: return "fact_checking";
    case TaskId::entity_linking: return "entity_linking";
    case TaskId::slot_filling: return "slot_filling";
    case TaskId::open_qa: return "open_qa";
    case TaskId::dialogue: return "dialogue";
  }
  return "unknown";
}

std::optional<TaskId> parse_task(std::string_view name) {
  for (TaskId t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

TaskId require_task(std::string_view name) {
  if (auto t = parse_task(name)) return *t;
  std::string valid;
  for (TaskId t : kAllTasks) {
    if (!valid.empty()) valid += ", ";
    valid += task_name(t);
  }
  throw ValidationError("unknown task \"" + std::string(name) +
                        "\"; valid tasks: " + valid);
}

const DatasetInfo* find_dataset(std::string_view name) {
  for (const auto& d : kDatasets) {
    if (d.name == name) return &d;
  }
  return nullptr;
}

TaskId task_of_dataset(std::string_view name) {
  if (const auto* d = find_dataset(name)) return d->task;
  throw ValidationError("unknown dataset \"" + std::string(name) + "\"");
}

Docid::Docid(std::string title) : title_(std::move(title)) {
  if (title_.empty()) throw ValidationError("docid must be non-empty");
  if (is_space(title_.front()) || is_space(title_.back())) {
    throw ValidationError("docid \"" + title_ +
                          "\" has leading or trailing whitespace");
  }
}

std::size_t Document::sentence_count() const {
  std::size_t n = 0;
  for (const auto& p : paragraphs) n += p.size();
  return n;
}

std::pair<std::size_t, std::size_t> Document::locate(std::size_t flat) const {
  for (std::size_t p = 0; p < paragraphs.size(); ++p) {
    if (flat < paragraphs[p].size()) return {p, flat};
    flat -= paragraphs[p].size();
  }
  throw std::out_of_range("sentence index out of range");
}

const std::string& Document::sentence(std::size_t flat) const {
  auto [p, s] = locate(flat);
  return paragraphs[p][s];
}

Corpus::Corpus(std::vector<Document> docs) : docs_(std::move(docs)) {
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    const Document& d = docs_[i];
    if (d.sentence_count() == 0) {
      throw ValidationError("document \"" + d.docid.str() +
                            "\" has no sentences");
    }
    if (!index_.emplace(d.docid.str(), i).second) {
      throw ValidationError("duplicate docid \"" + d.docid.str() + "\"");
    }
  }
  for (Document& d : docs_) {
    for (Anchor& a : d.anchors) {
      if (a.paragraph_index >= d.paragraphs.size() ||
          a.sentence_index >= d.paragraphs[a.paragraph_index].size()) {
        throw ValidationError("anchor in \"" + d.docid.str() +
                              "\" points outside the document");
      }
      const std::string& s = d.paragraphs[a.paragraph_index][a.sentence_index];
      if (a.start >= a.end || a.end > s.size()) {
        throw ValidationError("anchor span out of range in \"" +
                              d.docid.str() + "\"");
      }
      std::string surface = s.substr(a.start, a.end - a.start);
      if (!a.surface_text.empty() && a.surface_text != surface) {
        throw ValidationError("anchor surface text mismatch in \"" +
                              d.docid.str() + "\"");
      }
      a.surface_text = std::move(surface);
      a.dangling = !index_.contains(a.target.str());
      if (a.dangling) {
        warnings_.push_back("dangling anchor in \"" + d.docid.str() +
                            "\" -> \"" + a.target.str() + "\"");
      }
    }
  }
  for (const auto& w : warnings_) spdlog::debug("{}", w);
}

const Document* Corpus::find(const Docid& id) const {
  auto it = index_.find(id.str());
  return it == index_.end() ? nullptr : &docs_[it->second];
}

std::vector<Docid> Corpus::docids() const {
  std::vector<Docid> out;
  out.reserve(docs_.size());
  for (const auto& d : docs_) out.push_back(d.docid);
  return out;
}

namespace {

Document document_from_json(const json& j) {
  Document d;
  d.docid = Docid(j.at("title").get<std::string>());
  d.paragraphs = j.at("paragraphs").get<std::vector<std::vector<std::string>>>();
  if (j.contains("anchors")) {
    for (const auto& a : j.at("anchors")) {
      Anchor an;
      an.paragraph_index = a.at("p").get<std::size_t>();
      an.sentence_index = a.at("s").get<std::size_t>();
      an.start = a.at("start").get<std::size_t>();
      an.end = a.at("end").get<std::size_t>();
      an.target = Docid(a.at("target").get<std::string>());
      d.anchors.push_back(std::move(an));
    }
  }
  return d;
}

}  // namespace

std::string document_to_jsonl(const Document& doc) {
  json anchors = json::array();
  for (const auto& a : doc.anchors) {
    anchors.push_back({{"p", a.paragraph_index},
                       {"s", a.sentence_index},
                       {"start", a.start},
                       {"end", a.end},
                       {"target", a.target.str()}});
  }
  json j = {{"title", doc.docid.str()},
            {"paragraphs", doc.paragraphs},
            {"anchors", anchors}};
  return j.dump();
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  for_each_line(path, [&](std::string_view line, std::size_t n) {
    try {
      docs.push_back(document_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": malformed document: " + e.what(), n);
    } catch (const ValidationError& e) {
      throw ParseError(path.string() + ": " + e.what(), n);
    }
  });
  return Corpus(std::move(docs));
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : corpus.documents()) {
    out += document_to_jsonl(d);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace docstream
