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

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "docstream/common/rng.hpp"
#include "docstream/corpus/corpus.hpp"
#include "docstream/model/tokenizer.hpp"
#include "docstream/pseudoquery/detector.hpp"

namespace docstream {

// What a pseudo pair was built for: one of the three backbone pre-training
// objectives or one of the five task-specific ones.
enum class Objective {
  iss,
  lps,
  hip,
  fact_checking,
  entity_linking,
  slot_filling,
  open_qa,
  dialogue,
};

std::string_view objective_name(Objective o);
Objective objective_for(TaskId task);

struct PseudoPair {
  Objective task = Objective::iss;
  std::vector<std::string> query;
  std::vector<Docid> targets;
  Docid source_docid;

  bool operator==(const PseudoPair&) const = default;
};

// Sentinel for "as many as the document has" (entity linking anchors).
inline constexpr int kAllItems = std::numeric_limits<int>::max();

struct GeneratorConfig {
  int l = 3;
  int n = 10;
  int k_relations = 1;
  std::array<double, 5> o_distribution = {0.70, 0.20, 0.05, 0.03, 0.02};
  std::vector<std::string> interrogatives = {"what", "who",   "when", "where",
                                             "which", "how", "why"};
  int pairs_per_doc = 1;

  // Throws ValidationError on broken invariants.
  void validate() const;
};

// Defaults per objective (fact checking l=3 n=10, entity linking all
// anchors, slot filling l=3 k=1, open QA l=3 n=10, dialogue l=1 n=10).
struct GeneratorSuite {
  GeneratorConfig iss{.l = 3};
  GeneratorConfig lps{.l = 1};
  GeneratorConfig hip{.l = 2};
  GeneratorConfig fact_checking{.l = 3, .n = 10};
  GeneratorConfig entity_linking{.l = kAllItems};
  GeneratorConfig slot_filling{.l = 3, .k_relations = 1};
  GeneratorConfig open_qa{.l = 3, .n = 10};
  GeneratorConfig dialogue{.l = 1, .n = 10};

  const GeneratorConfig& for_objective(Objective o) const;
};

// Source of every random decision a generator makes. Tests script it to
// force particular choices.
class ChoiceSource {
 public:
  virtual ~ChoiceSource() = default;
  // Uniform in [0, n).
  virtual std::size_t index(std::size_t n) = 0;
  // min(k, n) distinct indices from [0, n), in sampled order.
  virtual std::vector<std::size_t> distinct(std::size_t n, std::size_t k) = 0;
  // Anchor count o drawn from the distribution (before clamping).
  virtual std::size_t o_count(const std::array<double, 5>& dist) = 0;
};

class RngChoices final : public ChoiceSource {
 public:
  explicit RngChoices(std::uint64_t seed) : rng_(seed) {}
  std::size_t index(std::size_t n) override { return rng_.uniform_index(n); }
  std::vector<std::size_t> distinct(std::size_t n, std::size_t k) override {
    return rng_.sample_distinct(n, k);
  }
  std::size_t o_count(const std::array<double, 5>& dist) override {
    return rng_.categorical(dist);
  }

 private:
  Rng rng_;
};

// Anchors usable as extra targets: resolved, not self-links, one per
// distinct target.
std::vector<const Anchor*> target_anchors(const Document& doc);

// [doc.docid] followed by the targets of o sampled anchors, o clamped to
// the number of usable anchors.
std::vector<Docid> sample_output_docids(const Document& doc, ChoiceSource& choices,
                                        const std::array<double, 5>& o_distribution);

std::vector<PseudoPair> gen_backbone_pairs(const Document& doc, Objective kind,
                                           const GeneratorConfig& cfg,
                                           ChoiceSource& choices);
std::vector<PseudoPair> gen_fact_checking(const Document& doc, const GeneratorConfig& cfg,
                                          ChoiceSource& choices);
std::vector<PseudoPair> gen_entity_linking(const Document& doc, const GeneratorConfig& cfg,
                                           ChoiceSource& choices);
// skipped, when given, counts sentences for which the detector returned
// no label.
std::vector<PseudoPair> gen_slot_filling(const Document& doc, const GeneratorConfig& cfg,
                                         const RelationDetector& detector,
                                         ChoiceSource& choices,
                                         std::size_t* skipped = nullptr);
std::vector<PseudoPair> gen_open_qa(const Document& doc, const GeneratorConfig& cfg,
                                    ChoiceSource& choices);
std::vector<PseudoPair> gen_dialogue(const Document& doc, const GeneratorConfig& cfg,
                                     ChoiceSource& choices);

// Dispatches on the objective. detector is required for slot filling.
std::vector<PseudoPair> generate_pairs(const Document& doc, Objective objective,
                                       const GeneratorSuite& suite,
                                       const RelationDetector* detector,
                                       ChoiceSource& choices);

// Runs one objective over many documents with per-document seeds
// derive_seed(seed, objective, stable_hash(docid)); output order follows docs.
std::vector<PseudoPair> generate_for_documents(const std::vector<const Document*>& docs,
                                               Objective objective,
                                               const GeneratorSuite& suite,
                                               const RelationDetector* detector,
                                               std::uint64_t seed);

// Keeps at most max_tokens tokens, centred on the [START_ENT]..[END_ENT]
// mention when present, otherwise the leading ones.
std::vector<std::string> truncate_around_mention(std::vector<std::string> tokens,
                                                 std::size_t max_tokens);

// Model input ids: truncate_around_mention, then encode.
std::vector<TokenId> encode_input(const Vocabulary& vocab, std::vector<std::string> tokens,
                                  std::size_t max_tokens);

// {"task":..., "query":..., "targets":[...], "source":...}
std::string pair_to_jsonl(const PseudoPair& pair);

}  // namespace docstream
