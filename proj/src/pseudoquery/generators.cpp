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

#include "docstream/pseudoquery/generators.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>

#include "docstream/common/error.hpp"
#include "docstream/model/tokenizer.hpp"

namespace docstream {

std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::iss: return "iss";
    case Objective::lps: return "lps";
    case Objective::hip: return "hip";
    case Objective::fact_checking: return "fact_checking";
    case Objective::entity_linking: return "entity_linking";
    case Objective::slot_filling: return "slot_filling";
    case Objective::open_qa: return "open_qa";
    case Objective::dialogue: return "dialogue";
  }
  return "unknown";
}

Objective objective_for(TaskId task) {
  switch (task) {
    case TaskId::fact_checking: return Objective::fact_checking;
    case TaskId::entity_linking: return Objective::entity_linking;
    case TaskId::slot_filling: return Objective::slot_filling;
    case TaskId::open_qa: return Objective::open_qa;
    case TaskId::dialogue: return Objective::dialogue;
  }
  return Objective::fact_checking;
}

void GeneratorConfig::validate() const {
  if (l < 1) throw ValidationError("generator l must be >= 1");
  if (n < 1) throw ValidationError("generator n must be >= 1");
  if (k_relations < 1) throw ValidationError("generator k_relations must be >= 1");
  if (pairs_per_doc < 1) throw ValidationError("pairs_per_doc must be >= 1");
  double sum = 0.0;
  for (double p : o_distribution) {
    if (p < 0.0) throw ValidationError("o_distribution has a negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("o_distribution must sum to 1");
  if (interrogatives.empty()) throw ValidationError("interrogatives must be non-empty");
}

const GeneratorConfig& GeneratorSuite::for_objective(Objective o) const {
  switch (o) {
    case Objective::iss: return iss;
    case Objective::lps: return lps;
    case Objective::hip: return hip;
    case Objective::fact_checking: return fact_checking;
    case Objective::entity_linking: return entity_linking;
    case Objective::slot_filling: return slot_filling;
    case Objective::open_qa: return open_qa;
    case Objective::dialogue: return dialogue;
  }
  return iss;
}

namespace {

std::size_t clamp_count(int l, std::size_t available) {
  return std::min(static_cast<std::size_t>(l), available);
}

std::vector<std::string> paragraph_tokens(const Document& doc, std::size_t p) {
  std::vector<std::string> out;
  for (const auto& s : doc.paragraphs[p]) {
    auto t = tokenize_words(s);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

// Random n-token window, or everything when the input is not longer.
std::vector<std::string> ngram_span(const std::vector<std::string>& tokens, int n,
                                    ChoiceSource& choices) {
  const auto len = static_cast<std::size_t>(n);
  if (tokens.size() <= len) return tokens;
  const std::size_t start = choices.index(tokens.size() - len + 1);
  return {tokens.begin() + static_cast<std::ptrdiff_t>(start),
          tokens.begin() + static_cast<std::ptrdiff_t>(start + len)};
}

void append(std::vector<std::string>& dst, const std::vector<std::string>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

std::vector<std::string> question(const Document& doc, const GeneratorConfig& cfg,
                                  const std::vector<std::string>& span,
                                  ChoiceSource& choices) {
  std::vector<std::string> q{cfg.interrogatives[choices.index(cfg.interrogatives.size())]};
  append(q, tokenize_words(doc.docid.str()));
  append(q, span);
  return q;
}

std::vector<const Anchor*> live_anchors(const Document& doc) {
  std::vector<const Anchor*> out;
  for (const auto& a : doc.anchors) {
    if (!a.dangling) out.push_back(&a);
  }
  return out;
}

// Sentence of the anchor with its neighbours inside the same paragraph.
std::vector<std::string> anchor_context(const Document& doc, const Anchor& a) {
  const auto& para = doc.paragraphs[a.paragraph_index];
  const std::size_t lo = a.sentence_index == 0 ? 0 : a.sentence_index - 1;
  const std::size_t hi = std::min(para.size() - 1, a.sentence_index + 1);
  std::vector<std::string> out;
  for (std::size_t s = lo; s <= hi; ++s) append(out, tokenize_words(para[s]));
  return out;
}

}  // namespace

std::vector<const Anchor*> target_anchors(const Document& doc) {
  std::vector<const Anchor*> out;
  std::set<Docid> seen{doc.docid};
  for (const auto& a : doc.anchors) {
    if (a.dangling) continue;
    if (seen.insert(a.target).second) out.push_back(&a);
  }
  return out;
}

std::vector<Docid> sample_output_docids(const Document& doc, ChoiceSource& choices,
                                        const std::array<double, 5>& o_distribution) {
  const auto usable = target_anchors(doc);
  const std::size_t o = std::min(choices.o_count(o_distribution), usable.size());
  std::vector<Docid> out{doc.docid};
  if (o == 0) return out;
  for (std::size_t idx : choices.distinct(usable.size(), o)) out.push_back(usable[idx]->target);
  return out;
}

std::vector<PseudoPair> gen_backbone_pairs(const Document& doc, Objective kind,
                                           const GeneratorConfig& cfg,
                                           ChoiceSource& choices) {
  std::vector<PseudoPair> out;
  switch (kind) {
    case Objective::iss: {
      const std::size_t total = doc.sentence_count();
      for (std::size_t s : choices.distinct(total, clamp_count(cfg.l, total))) {
        PseudoPair p{kind, tokenize_words(doc.sentence(s)), {}, doc.docid};
        p.targets = sample_output_docids(doc, choices, cfg.o_distribution);
        out.push_back(std::move(p));
      }
      break;
    }
    case Objective::lps: {
      for (std::size_t pi = 0; pi < clamp_count(cfg.l, doc.paragraphs.size()); ++pi) {
        PseudoPair p{kind, paragraph_tokens(doc, pi), {}, doc.docid};
        p.targets = sample_output_docids(doc, choices, cfg.o_distribution);
        out.push_back(std::move(p));
      }
      break;
    }
    case Objective::hip: {
      const auto anchors = live_anchors(doc);
      for (std::size_t ai : choices.distinct(anchors.size(), clamp_count(cfg.l, anchors.size()))) {
        const Anchor& a = *anchors[ai];
        out.push_back({kind, anchor_context(doc, a), {a.target}, doc.docid});
      }
      break;
    }
    default:
      throw ValidationError("not a backbone objective: " + std::string(objective_name(kind)));
  }
  return out;
}

std::vector<PseudoPair> gen_fact_checking(const Document& doc, const GeneratorConfig& cfg,
                                          ChoiceSource& choices) {
  std::vector<PseudoPair> out;
  const std::size_t total = doc.sentence_count();
  for (std::size_t s : choices.distinct(total, clamp_count(cfg.l, total))) {
    PseudoPair p{Objective::fact_checking, tokenize_words(doc.docid.str()), {}, doc.docid};
    append(p.query, ngram_span(tokenize_words(doc.sentence(s)), cfg.n, choices));
    p.targets = sample_output_docids(doc, choices, cfg.o_distribution);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PseudoPair> gen_entity_linking(const Document& doc, const GeneratorConfig& cfg,
                                           ChoiceSource& choices) {
  std::vector<PseudoPair> out;
  const auto anchors = live_anchors(doc);
  for (std::size_t ai : choices.distinct(anchors.size(), clamp_count(cfg.l, anchors.size()))) {
    const Anchor& a = *anchors[ai];
    const std::string& s = doc.paragraphs[a.paragraph_index][a.sentence_index];
    std::vector<std::string> q = tokenize_words(s.substr(0, a.start));
    q.emplace_back(special::kStartEnt);
    append(q, tokenize_words(a.surface_text));
    q.emplace_back(special::kEndEnt);
    append(q, tokenize_words(s.substr(a.end)));
    out.push_back({Objective::entity_linking, std::move(q), {a.target}, doc.docid});
  }
  return out;
}

std::vector<PseudoPair> gen_slot_filling(const Document& doc, const GeneratorConfig& cfg,
                                         const RelationDetector& detector,
                                         ChoiceSource& choices, std::size_t* skipped) {
  std::vector<PseudoPair> out;
  const std::size_t total = doc.sentence_count();
  for (std::size_t s : choices.distinct(total, clamp_count(cfg.l, total))) {
    const auto labels =
        detector.top_k(doc.sentence(s), static_cast<std::size_t>(cfg.k_relations));
    if (labels.empty()) {
      if (skipped) ++*skipped;
      continue;
    }
    for (const auto& label : labels) {
      PseudoPair p{Objective::slot_filling, tokenize_words(doc.docid.str()), {doc.docid},
                   doc.docid};
      p.query.emplace_back(special::kSep);
      append(p.query, tokenize_words(label));
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<PseudoPair> gen_open_qa(const Document& doc, const GeneratorConfig& cfg,
                                    ChoiceSource& choices) {
  std::vector<PseudoPair> out;
  const std::size_t total = doc.sentence_count();
  for (std::size_t s : choices.distinct(total, clamp_count(cfg.l, total))) {
    auto span = ngram_span(tokenize_words(doc.sentence(s)), cfg.n, choices);
    PseudoPair p{Objective::open_qa, question(doc, cfg, span, choices), {}, doc.docid};
    p.targets = sample_output_docids(doc, choices, cfg.o_distribution);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PseudoPair> gen_dialogue(const Document& doc, const GeneratorConfig& cfg,
                                     ChoiceSource& choices) {
  std::vector<PseudoPair> out;
  for (std::size_t pi = 0; pi < clamp_count(cfg.l, doc.paragraphs.size()); ++pi) {
    auto context = paragraph_tokens(doc, pi);
    auto span = ngram_span(context, cfg.n, choices);
    PseudoPair p{Objective::dialogue, context, {}, doc.docid};
    append(p.query, question(doc, cfg, span, choices));
    p.targets = sample_output_docids(doc, choices, cfg.o_distribution);
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<PseudoPair> generate_pairs(const Document& doc, Objective objective,
                                       const GeneratorSuite& suite,
                                       const RelationDetector* detector,
                                       ChoiceSource& choices) {
  const GeneratorConfig& cfg = suite.for_objective(objective);
  std::vector<PseudoPair> out;
  for (int rep = 0; rep < cfg.pairs_per_doc; ++rep) {
    std::vector<PseudoPair> batch;
    switch (objective) {
      case Objective::iss:
      case Objective::lps:
      case Objective::hip: batch = gen_backbone_pairs(doc, objective, cfg, choices); break;
      case Objective::fact_checking: batch = gen_fact_checking(doc, cfg, choices); break;
      case Objective::entity_linking: batch = gen_entity_linking(doc, cfg, choices); break;
      case Objective::slot_filling:
        if (!detector) throw ValidationError("slot filling needs a relation detector");
        batch = gen_slot_filling(doc, cfg, *detector, choices);
        break;
      case Objective::open_qa: batch = gen_open_qa(doc, cfg, choices); break;
      case Objective::dialogue: batch = gen_dialogue(doc, cfg, choices); break;
    }
    for (auto& p : batch) out.push_back(std::move(p));
  }
  return out;
}

std::vector<PseudoPair> generate_for_documents(const std::vector<const Document*>& docs,
                                               Objective objective,
                                               const GeneratorSuite& suite,
                                               const RelationDetector* detector,
                                               std::uint64_t seed) {
  std::vector<std::vector<PseudoPair>> per_doc(docs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(docs.size()); ++i) {
    const Document& d = *docs[static_cast<std::size_t>(i)];
    RngChoices choices(derive_seed(seed, objective_name(objective), stable_hash(d.docid.str())));
    per_doc[static_cast<std::size_t>(i)] = generate_pairs(d, objective, suite, detector, choices);
  }
  std::vector<PseudoPair> out;
  for (auto& v : per_doc) {
    for (auto& p : v) out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::string> truncate_around_mention(std::vector<std::string> tokens,
                                                 std::size_t max_tokens) {
  if (tokens.size() <= max_tokens) return tokens;
  const auto start_it = std::find(tokens.begin(), tokens.end(), special::kStartEnt);
  const auto end_it = std::find(tokens.begin(), tokens.end(), special::kEndEnt);
  std::size_t begin = 0;
  if (start_it != tokens.end() && end_it != tokens.end() && start_it < end_it) {
    const auto ms = static_cast<std::size_t>(start_it - tokens.begin());
    const auto me = static_cast<std::size_t>(end_it - tokens.begin()) + 1;
    const std::size_t mention = me - ms;
    if (mention >= max_tokens) {
      begin = ms;
    } else {
      // Split the remaining budget evenly between left and right context,
      // giving unused budget on one side to the other.
      const std::size_t spare = max_tokens - mention;
      std::size_t left = spare / 2;
      std::size_t right = spare - left;
      const std::size_t avail_right = tokens.size() - me;
      if (ms < left) {
        right += left - ms;
        left = ms;
      } else if (avail_right < right) {
        left += right - avail_right;
      }
      begin = ms - std::min(left, ms);
    }
  }
  return {tokens.begin() + static_cast<std::ptrdiff_t>(begin),
          tokens.begin() + static_cast<std::ptrdiff_t>(begin + max_tokens)};
}

std::vector<TokenId> encode_input(const Vocabulary& vocab, std::vector<std::string> tokens,
                                  std::size_t max_tokens) {
  const auto kept = truncate_around_mention(std::move(tokens), max_tokens);
  return vocab.encode_tokens(kept);
}

std::string pair_to_jsonl(const PseudoPair& pair) {
  nlohmann::json targets = nlohmann::json::array();
  for (const auto& t : pair.targets) targets.push_back(t.str());
  nlohmann::json j = {{"task", std::string(objective_name(pair.task))},
                      {"query", join_tokens(pair.query)},
                      {"targets", targets},
                      {"source", pair.source_docid.str()}};
  return j.dump();
}

}  // namespace docstream
