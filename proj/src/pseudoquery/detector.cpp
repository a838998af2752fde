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

#include "docstream/pseudoquery/detector.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "docstream/model/tokenizer.hpp"

namespace docstream {

namespace {

std::set<std::string> features(const std::string& text) {
  std::set<std::string> out;
  for (auto& t : tokenize_words(text)) {
    std::string lower;
    for (char c : t) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.insert(std::move(lower));
  }
  return out;
}

}  // namespace

BowRelationDetector BowRelationDetector::train(const std::vector<LabeledText>& data,
                                               int epochs) {
  BowRelationDetector det;
  std::set<std::string> label_set;
  for (const auto& d : data) label_set.insert(d.label);
  if (label_set.empty()) {
    det.labels_ = {kFallbackLabel};
    det.bias_ = {0.0};
    return det;
  }
  det.labels_.assign(label_set.begin(), label_set.end());
  const std::size_t nl = det.labels_.size();
  det.bias_.assign(nl, 0.0);

  std::vector<std::set<std::string>> feats;
  std::vector<std::size_t> gold;
  for (const auto& d : data) {
    feats.push_back(features(d.text));
    gold.push_back(static_cast<std::size_t>(
        std::lower_bound(det.labels_.begin(), det.labels_.end(), d.label) -
        det.labels_.begin()));
    for (const auto& f : feats.back()) det.weights_.try_emplace(f, std::vector<double>(nl, 0.0));
  }

  for (int e = 0; e < epochs; ++e) {
    std::size_t mistakes = 0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
      std::vector<double> s = det.bias_;
      for (const auto& f : feats[i]) {
        const auto& w = det.weights_.at(f);
        for (std::size_t c = 0; c < nl; ++c) s[c] += w[c];
      }
      const auto pred = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
      if (pred == gold[i]) continue;
      ++mistakes;
      det.bias_[gold[i]] += 1.0;
      det.bias_[pred] -= 1.0;
      for (const auto& f : feats[i]) {
        auto& w = det.weights_.at(f);
        w[gold[i]] += 1.0;
        w[pred] -= 1.0;
      }
    }
    if (mistakes == 0) break;
  }
  return det;
}

std::vector<double> BowRelationDetector::scores(const std::string& sentence) const {
  std::vector<double> s = bias_;
  for (const auto& f : features(sentence)) {
    auto it = weights_.find(f);
    if (it == weights_.end()) continue;
    for (std::size_t c = 0; c < s.size(); ++c) s[c] += it->second[c];
  }
  return s;
}

std::vector<std::string> BowRelationDetector::top_k(const std::string& sentence,
                                                    std::size_t k) const {
  const auto s = scores(sentence);
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(labels_[order[i]]);
  return out;
}

std::vector<LabeledText> slot_filling_training_data(
    const std::vector<QueryExample>& examples, const Corpus* corpus) {
  std::vector<LabeledText> out;
  for (const auto& ex : examples) {
    if (ex.task != TaskId::slot_filling) continue;
    const auto sep = ex.query_text.find(special::kSep);
    if (sep == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(' ');
      const auto b = s.find_last_not_of(' ');
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    LabeledText lt;
    lt.label = trim(ex.query_text.substr(sep + special::kSep.size()));
    lt.text = trim(ex.query_text.substr(0, sep));
    if (lt.label.empty()) continue;
    if (corpus) {
      for (const auto& p : ex.provenance) {
        if (const Document* d = corpus->find(p)) {
          for (std::size_t s = 0; s < d->sentence_count(); ++s) lt.text += " " + d->sentence(s);
        }
      }
    }
    out.push_back(std::move(lt));
  }
  return out;
}

BowRelationDetector train_default_detector(const std::vector<QueryExample>& examples,
                                           const Corpus* corpus) {
  return BowRelationDetector::train(slot_filling_training_data(examples, corpus), 50);
}

}  // namespace docstream
