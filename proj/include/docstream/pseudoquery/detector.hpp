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

#include <map>
#include <string>
#include <vector>

#include "docstream/corpus/benchmark.hpp"
#include "docstream/corpus/corpus.hpp"

namespace docstream {

// sentence -> relation labels ranked by confidence. Implementations must
// be deterministic.
class RelationDetector {
 public:
  virtual ~RelationDetector() = default;
  virtual const std::vector<std::string>& labels() const = 0;
  virtual std::vector<std::string> top_k(const std::string& sentence,
                                         std::size_t k) const = 0;
};

struct LabeledText {
  std::string text;
  std::string label;
};

// Multiclass perceptron over lower-cased bag-of-words features. Stops early
// once an epoch makes no mistakes.
class BowRelationDetector final : public RelationDetector {
 public:
  static constexpr const char* kFallbackLabel = "related to";

  // Empty data yields a detector that always answers kFallbackLabel.
  static BowRelationDetector train(const std::vector<LabeledText>& data,
                                   int epochs = 10);

  const std::vector<std::string>& labels() const override { return labels_; }
  std::vector<std::string> top_k(const std::string& sentence,
                                 std::size_t k) const override;

 private:
  std::vector<double> scores(const std::string& sentence) const;

  std::vector<std::string> labels_;
  // feature -> per-label weight
  std::map<std::string, std::vector<double>> weights_;
  std::vector<double> bias_;
};

// Turns slot-filling queries "subject [SEP] relation" into labelled texts;
// the text is the subject plus the sentences of the provenance documents
// found in the corpus. Queries without a separator are ignored.
std::vector<LabeledText> slot_filling_training_data(
    const std::vector<QueryExample>& examples, const Corpus* corpus);

BowRelationDetector train_default_detector(const std::vector<QueryExample>& examples,
                                           const Corpus* corpus);

}  // namespace docstream
