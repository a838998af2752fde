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

#include "docstream/corpus/synthetic.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "docstream/common/error.hpp"
#include "docstream/common/rng.hpp"

namespace docstream {

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                   "p", "r", "s", "t", "v", "z", "br", "tr",
                                   "st", "kl"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

constexpr const char* kFiller[] = {
    "the",    "a",     "of",      "in",      "and",    "is",     "was",
    "with",   "for",   "by",      "on",      "as",     "its",    "from",
    "known",  "many",  "early",   "later",   "first",  "major",  "small",
    "large",  "part",  "also",    "during",  "several", "other", "new",
    "old",    "region", "period", "group",   "people", "often",  "widely"};

constexpr const char* kInterrogatives[] = {"what", "who", "when", "where",
                                           "which", "how", "why"};

std::string pseudo_word(Rng& rng, std::size_t syllables) {
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += kOnsets[rng.uniform_index(std::size(kOnsets))];
    w += kVowels[rng.uniform_index(std::size(kVowels))];
  }
  return w;
}

std::string unique_word(Rng& rng, std::set<std::string>& used) {
  for (;;) {
    std::string w = pseudo_word(rng, 2 + rng.uniform_index(2));
    if (used.insert(w).second) return w;
  }
}

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string join(const std::vector<std::string>& words, std::size_t from = 0,
                 std::size_t to = std::string::npos) {
  std::string out;
  to = std::min(to, words.size());
  for (std::size_t i = from; i < to; ++i) {
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

struct DraftDoc {
  std::string title;
  std::vector<std::string> keywords;
  std::size_t relation = 0;
};

}  // namespace

const std::vector<RelationCue>& synthetic_relations() {
  static const std::vector<RelationCue> rels = {
      {"headquarters location", "headquartered"},
      {"place of birth", "born"},
      {"occupation", "worked"},
      {"country", "located"},
      {"founded by", "founded"},
      {"member of", "joined"},
  };
  return rels;
}

Corpus make_synthetic_corpus(const SyntheticCorpusConfig& cfg) {
  if (cfg.num_docs == 0) throw ValidationError("num_docs must be > 0");
  if (cfg.min_paragraphs == 0 || cfg.max_paragraphs < cfg.min_paragraphs ||
      cfg.sentences_per_paragraph == 0 || cfg.min_sentence_words < 3 ||
      cfg.max_sentence_words < cfg.min_sentence_words) {
    throw ValidationError("invalid synthetic corpus shape");
  }
  Rng rng(derive_seed(cfg.seed, "corpus.synthetic"));
  std::set<std::string> used(std::begin(kFiller), std::end(kFiller));
  used.insert(std::begin(kInterrogatives), std::end(kInterrogatives));
  for (const auto& r : synthetic_relations()) {
    for (const auto& w : split_words(r.label)) used.insert(w);
    used.insert(r.cue);
  }

  std::vector<DraftDoc> drafts(cfg.num_docs);
  std::set<std::string> titles;
  for (std::size_t i = 0; i < cfg.num_docs; ++i) {
    std::string title;
    do {
      if (i > 0 && rng.uniform() < cfg.title_extension_rate) {
        title = drafts[rng.uniform_index(i)].title + " " +
                capitalize(unique_word(rng, used));
      } else {
        title = capitalize(unique_word(rng, used));
        if (rng.uniform() < 0.5) title += " " + capitalize(unique_word(rng, used));
      }
    } while (!titles.insert(title).second);
    drafts[i].title = title;
    for (std::size_t k = 0; k < cfg.keywords_per_doc; ++k) {
      drafts[i].keywords.push_back(unique_word(rng, used));
    }
    drafts[i].relation = rng.uniform_index(synthetic_relations().size());
  }

  std::vector<Document> docs;
  docs.reserve(cfg.num_docs);
  for (std::size_t i = 0; i < cfg.num_docs; ++i) {
    const DraftDoc& dd = drafts[i];
    Document doc;
    doc.docid = Docid(dd.title);
    const std::size_t np =
        cfg.min_paragraphs + rng.uniform_index(cfg.max_paragraphs - cfg.min_paragraphs + 1);
    std::vector<std::vector<std::vector<std::string>>> words(np);
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t s = 0; s < cfg.sentences_per_paragraph; ++s) {
        const std::size_t len =
            cfg.min_sentence_words +
            rng.uniform_index(cfg.max_sentence_words - cfg.min_sentence_words + 1);
        std::vector<std::string> w;
        for (std::size_t k = 0; k < len; ++k) {
          if (rng.uniform() < 0.4) {
            w.push_back(dd.keywords[rng.uniform_index(dd.keywords.size())]);
          } else {
            w.push_back(kFiller[rng.uniform_index(std::size(kFiller))]);
          }
        }
        words[p].push_back(std::move(w));
      }
    }
    // Lead sentence names the subject; one sentence carries the relation cue.
    auto& lead = words[0][0];
    lead.insert(lead.begin(), {dd.title, "is", "a"});
    const std::size_t total = np * cfg.sentences_per_paragraph;
    const std::size_t rel_flat = total > 1 ? 1 + rng.uniform_index(total - 1) : 0;
    {
      auto& rs = words[rel_flat / cfg.sentences_per_paragraph]
                      [rel_flat % cfg.sentences_per_paragraph];
      const auto& rel = synthetic_relations()[dd.relation];
      rs.insert(rs.begin() + 1, rel.cue);
    }

    // Anchors: splice another document's title into a random sentence.
    struct PendingAnchor {
      std::size_t p, s, word;
      std::size_t target;
    };
    std::vector<PendingAnchor> pending;
    if (cfg.num_docs > 1) {
      std::vector<std::size_t> others;
      for (std::size_t j = 0; j < cfg.num_docs; ++j) {
        if (j != i) others.push_back(j);
      }
      const auto picks = rng.sample_distinct(others.size(), cfg.anchors_per_doc);
      for (std::size_t pick : picks) {
        const std::size_t flat = rng.uniform_index(total);
        const std::size_t p = flat / cfg.sentences_per_paragraph;
        const std::size_t s = flat % cfg.sentences_per_paragraph;
        bool clash = false;
        for (const auto& pa : pending) clash |= (pa.p == p && pa.s == s);
        if (clash) continue;
        auto& sw = words[p][s];
        const std::size_t at = 1 + rng.uniform_index(sw.size());
        sw.insert(sw.begin() + static_cast<std::ptrdiff_t>(at),
                  drafts[others[pick]].title);
        pending.push_back({p, s, at, others[pick]});
      }
    }

    doc.paragraphs.resize(np);
    for (std::size_t p = 0; p < np; ++p) {
      for (std::size_t s = 0; s < words[p].size(); ++s) {
        doc.paragraphs[p].push_back(join(words[p][s]) + " .");
      }
    }
    for (const auto& pa : pending) {
      std::size_t start = 0;
      for (std::size_t k = 0; k < pa.word; ++k) start += words[pa.p][pa.s][k].size() + 1;
      Anchor a;
      a.paragraph_index = pa.p;
      a.sentence_index = pa.s;
      a.start = start;
      a.end = start + drafts[pa.target].title.size();
      a.target = Docid(drafts[pa.target].title);
      doc.anchors.push_back(std::move(a));
    }
    docs.push_back(std::move(doc));
  }
  return Corpus(std::move(docs));
}

namespace {

// n contiguous words of a sentence, trailing period dropped.
std::string random_span(Rng& rng, const std::string& sentence, std::size_t n) {
  auto w = split_words(sentence);
  if (!w.empty() && w.back() == ".") w.pop_back();
  if (w.size() <= n) return join(w);
  const std::size_t start = rng.uniform_index(w.size() - n + 1);
  return join(w, start, start + n);
}

std::string random_sentence(Rng& rng, const Document& d) {
  return d.sentence(rng.uniform_index(d.sentence_count()));
}

const Anchor* random_live_anchor(Rng& rng, const Document& d) {
  std::vector<const Anchor*> live;
  for (const auto& a : d.anchors) {
    if (!a.dangling && a.target != d.docid) live.push_back(&a);
  }
  if (live.empty()) return nullptr;
  return live[rng.uniform_index(live.size())];
}

std::string mark_entity(const Document& src, const Anchor& a) {
  const std::string& s = src.paragraphs[a.paragraph_index][a.sentence_index];
  return s.substr(0, a.start) + "[START_ENT] " + s.substr(a.start, a.end - a.start) +
         " [END_ENT]" + s.substr(a.end);
}

struct InboundIndex {
  // target title -> (source doc, anchor)
  std::map<std::string, std::vector<std::pair<const Document*, const Anchor*>>> by_target;
};

QueryExample make_query(Rng& rng, const InboundIndex& inbound,
                        const Document& d, const DatasetInfo& ds) {
  QueryExample q;
  q.dataset = std::string(ds.name);
  q.task = ds.task;
  q.provenance = {d.docid};
  const std::string& title = d.docid.str();
  const std::string wh = kInterrogatives[rng.uniform_index(std::size(kInterrogatives))];
  const std::string name(ds.name);

  if (ds.task == TaskId::fact_checking) {
    q.query_text = title + " " + random_span(rng, random_sentence(rng, d), 5);
    if (rng.uniform() < 0.3) {
      if (const Anchor* a = random_live_anchor(rng, d)) {
        q.query_text += " " + a->target.str();
        q.provenance.push_back(a->target);
      }
    }
  } else if (ds.task == TaskId::entity_linking) {
    auto it = inbound.by_target.find(title);
    if (it != inbound.by_target.end() && !it->second.empty() && name != "WnCw") {
      const auto& [src, a] = it->second[rng.uniform_index(it->second.size())];
      q.query_text = mark_entity(*src, *a);
    } else {
      q.query_text = random_span(rng, random_sentence(rng, d), 4) + " [START_ENT] " +
                     title + " [END_ENT] " + random_span(rng, random_sentence(rng, d), 3);
    }
  } else if (ds.task == TaskId::slot_filling) {
    const auto& rels = synthetic_relations();
    std::string label = rels[0].label;
    for (const auto& r : rels) {
      for (std::size_t s = 0; s < d.sentence_count(); ++s) {
        if (d.sentence(s).find(" " + r.cue + " ") != std::string::npos) label = r.label;
      }
    }
    q.query_text = title + " [SEP] " + label;
  } else if (ds.task == TaskId::open_qa) {
    if (name == "HoPo") {
      q.query_text = wh + " " + title + " " + random_span(rng, random_sentence(rng, d), 3);
      if (const Anchor* a = random_live_anchor(rng, d)) {
        q.query_text += " " + a->target.str();
        q.provenance.push_back(a->target);
      }
    } else if (name == "ELI5") {
      q.query_text = "how does " + random_span(rng, random_sentence(rng, d), 4) + " work ?";
    } else if (name == "TQA") {
      q.query_text = wh + " " + random_span(rng, random_sentence(rng, d), 6) + " ?";
    } else {
      q.query_text = wh + " " + title + " " + random_span(rng, random_sentence(rng, d), 5) + " ?";
    }
  } else {
    const auto& para = d.paragraphs[rng.uniform_index(d.paragraphs.size())];
    q.query_text = para[rng.uniform_index(para.size())] + " " + wh + " " + title + " " +
                   random_span(rng, random_sentence(rng, d), 4) + " ?";
  }
  return q;
}

}  // namespace

SyntheticQueries make_synthetic_queries(const Corpus& corpus,
                                        const SyntheticQueryConfig& cfg) {
  std::vector<const DatasetInfo*> datasets;
  if (cfg.datasets.empty()) {
    for (const auto& d : kDatasets) datasets.push_back(&d);
  } else {
    for (const auto& name : cfg.datasets) {
      const auto* d = find_dataset(name);
      if (!d) throw ValidationError("unknown dataset \"" + name + "\"");
      datasets.push_back(d);
    }
  }
  InboundIndex inbound;
  for (const auto& src : corpus.documents()) {
    for (const auto& a : src.anchors) {
      if (!a.dangling) inbound.by_target[a.target.str()].emplace_back(&src, &a);
    }
  }

  SyntheticQueries out;
  for (const DatasetInfo* ds : datasets) {
    for (std::size_t di = 0; di < corpus.size(); ++di) {
      const Document& d = corpus.at(di);
      Rng rng(derive_seed(cfg.seed, "corpus.queries", stable_hash(ds->name), di));
      if (ds->has_train_split) {
        for (std::size_t k = 0; k < cfg.train_per_doc; ++k) {
          QueryExample q = make_query(rng, inbound, d, *ds);
          q.query_id = std::string(ds->name) + "-train-" + std::to_string(di) + "-" +
                       std::to_string(k);
          out.train.push_back(std::move(q));
        }
      }
      for (std::size_t k = 0; k < cfg.dev_per_doc; ++k) {
        QueryExample q = make_query(rng, inbound, d, *ds);
        q.query_id =
            std::string(ds->name) + "-dev-" + std::to_string(di) + "-" + std::to_string(k);
        out.dev.push_back(std::move(q));
      }
    }
  }
  return out;
}

}  // namespace docstream
