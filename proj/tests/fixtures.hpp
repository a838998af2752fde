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

#include <deque>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>

#include "docstream/corpus/corpus.hpp"
#include "docstream/pseudoquery/generators.hpp"

namespace fixtures {

using namespace docstream;

inline Anchor anchor_at(const std::string& sentence, std::size_t p, std::size_t s,
                        const std::string& surface, const std::string& target) {
  Anchor a;
  a.paragraph_index = p;
  a.sentence_index = s;
  a.start = sentence.find(surface);
  a.end = a.start + surface.size();
  a.surface_text = surface;
  a.target = Docid(target);
  return a;
}

// "Microsoft": one paragraph of four sentences, "Windows" linked from
// sentence 2 and "Bill Gates" from sentence 3.
inline Document microsoft() {
  Document d;
  d.docid = Docid("Microsoft");
  d.paragraphs = {{
      "Microsoft is an American technology company founded in 1975 .",
      "The company is headquartered in Redmond , Washington .",
      "Its best known product is the Windows operating system .",
      "It was founded by Bill Gates and Paul Allen .",
  }};
  d.anchors = {anchor_at(d.paragraphs[0][2], 0, 2, "Windows", "Windows"),
               anchor_at(d.paragraphs[0][3], 0, 3, "Bill Gates", "Bill Gates")};
  return d;
}

inline Document stub(const std::string& title, const std::string& text) {
  Document d;
  d.docid = Docid(title);
  d.paragraphs = {{text}};
  return d;
}

// Microsoft plus the two documents it links to.
inline Corpus microsoft_corpus() {
  return Corpus({microsoft(), stub("Windows", "Windows is an operating system ."),
                 stub("Bill Gates", "Bill Gates is a businessman .")});
}

// Replays scripted decisions; throws once a script runs dry.
class ScriptedChoices final : public ChoiceSource {
 public:
  std::deque<std::size_t> indices;
  std::deque<std::vector<std::size_t>> subsets;
  std::deque<std::size_t> o_values;

  std::size_t index(std::size_t n) override {
    if (indices.empty()) throw std::logic_error("no scripted index left");
    const std::size_t v = indices.front();
    indices.pop_front();
    if (v >= n) throw std::logic_error("scripted index out of range");
    return v;
  }
  std::vector<std::size_t> distinct(std::size_t n, std::size_t k) override {
    if (subsets.empty()) throw std::logic_error("no scripted subset left");
    auto v = subsets.front();
    subsets.pop_front();
    if (v.size() != std::min(n, k)) throw std::logic_error("scripted subset has the wrong size");
    return v;
  }
  std::size_t o_count(const std::array<double, 5>&) override {
    if (o_values.empty()) throw std::logic_error("no scripted o left");
    const std::size_t v = o_values.front();
    o_values.pop_front();
    return v;
  }
};

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("docstream_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace fixtures
