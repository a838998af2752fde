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

#include <doctest.h>

#include <algorithm>
#include <set>

#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"
#include "docstream/common/rng.hpp"
#include "docstream/corpus/benchmark.hpp"
#include "docstream/corpus/synthetic.hpp"
#include "fixtures.hpp"

using namespace docstream;

namespace {

Corpus numbered_corpus(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back(fixtures::stub("doc " + std::to_string(i), "text of doc " + std::to_string(i)));
  }
  return Corpus(std::move(docs));
}

std::vector<std::size_t> sizes(const Partitions& parts) {
  std::vector<std::size_t> out;
  for (const auto& p : parts) out.push_back(p.size());
  return out;
}

QueryExample example(const std::string& id, std::vector<std::string> prov) {
  QueryExample q;
  q.query_id = id;
  q.dataset = "NQ";
  q.task = TaskId::open_qa;
  q.query_text = "question " + id;
  for (auto& p : prov) q.provenance.emplace_back(p);
  return q;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("docids reject empty and padded titles") {
  CHECK_THROWS_AS(Docid(""), ValidationError);
  CHECK_THROWS_AS(Docid(" Microsoft"), ValidationError);
  CHECK_THROWS_AS(Docid("Microsoft "), ValidationError);
  CHECK(Docid("Nelson Mandela").str() == "Nelson Mandela");
}

TEST_CASE("loading corpora") {
  const auto dir = fixtures::temp_dir("corpus");
  SUBCASE("three well-formed documents") {
    save_corpus(fixtures::microsoft_corpus(), dir / "c.jsonl");
    const Corpus c = load_corpus(dir / "c.jsonl");
    CHECK(c.size() == 3);
    CHECK(c.warnings().empty());
    CHECK(c == fixtures::microsoft_corpus());
    CHECK(c.find(Docid("Microsoft"))->anchors[1].surface_text == "Bill Gates");
  }
  SUBCASE("dangling anchor loads with one warning") {
    Corpus c({fixtures::microsoft(), fixtures::stub("Windows", "Windows is an OS .")});
    CHECK(c.size() == 2);
    REQUIRE(c.warnings().size() == 1);
    CHECK(c.warnings()[0].find("Bill Gates") != std::string::npos);
    CHECK(c.find(Docid("Microsoft"))->anchors[1].dangling);
  }
  SUBCASE("duplicate titles are rejected") {
    write_file_atomic(dir / "dup.jsonl",
                      "{\"title\":\"Microsoft\",\"paragraphs\":[[\"a .\"]]}\n"
                      "{\"title\":\"Microsoft\",\"paragraphs\":[[\"b .\"]]}\n");
    CHECK_THROWS_AS(load_corpus(dir / "dup.jsonl"), ValidationError);
  }
  SUBCASE("malformed lines report the line number") {
    write_file_atomic(dir / "bad.jsonl", "{\"title\":\"A\",\"paragraphs\":[[\"a .\"]]}\n{oops\n");
    try {
      load_corpus(dir / "bad.jsonl");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("anchor spans must match the sentence") {
    Document d = fixtures::microsoft();
    d.anchors[0].end = 1000;
    CHECK_THROWS_AS(Corpus({d}), ValidationError);
  }
}

TEST_CASE("split sizes") {
  CHECK(sizes(split_sessions(numbered_corpus(100), 4, 0.6, 1)) ==
        std::vector<std::size_t>{60, 10, 10, 10, 10});
  CHECK(sizes(split_sessions(numbered_corpus(5), 4, 0.6, 1)) ==
        std::vector<std::size_t>{3, 1, 1, 0, 0});
  CHECK(sizes(split_sessions(numbered_corpus(1000), 4, 0.6, 9)) ==
        std::vector<std::size_t>{600, 100, 100, 100, 100});
  CHECK(sizes(split_sessions(numbered_corpus(13), 3, 0.5, 2)) ==
        std::vector<std::size_t>{7, 2, 2, 2});
  CHECK_THROWS_AS(split_sessions(numbered_corpus(10), 0, 0.6, 1), ValidationError);
  CHECK_THROWS_AS(split_sessions(numbered_corpus(10), 4, 1.5, 1), ValidationError);
  CHECK_THROWS_AS(split_sessions(numbered_corpus(10), 4, 0.0, 1), ValidationError);
}

TEST_CASE("split is a seeded partition") {
  const Corpus c = numbered_corpus(257);
  const auto a = split_sessions(c, 4, 0.6, 11);
  CHECK(a == split_sessions(c, 4, 0.6, 11));
  CHECK(a != split_sessions(c, 4, 0.6, 12));
  std::multiset<Docid> all;
  for (const auto& p : a) all.insert(p.begin(), p.end());
  const auto ids = c.docids();
  CHECK(all.size() == ids.size());
  CHECK(std::set<Docid>(all.begin(), all.end()) == std::set<Docid>(ids.begin(), ids.end()));
}

TEST_CASE("filter_examples hand cases") {
  const Partitions parts = {{Docid("a"), Docid("c")}, {Docid("d")}, {Docid("b")}};
  const auto only_a = example("1", {"a"});
  const auto ab = example("2", {"a", "b"});
  CHECK(filter_examples({only_a}, parts, 0).size() == 1);
  CHECK(filter_examples({ab}, parts, 1).empty());
  CHECK(filter_examples({ab}, parts, 2).size() == 1);
  const auto ad = example("3", {"a", "d"});
  CHECK(filter_examples({ad}, parts, 1).size() == 1);
  CHECK(filter_examples({ad}, parts, 2).empty());
  CHECK(filter_examples({only_a}, parts, 1).empty());
  CHECK(availability_session(example("4", {"zzz"}), parts) == -1);
}

TEST_CASE("filter_examples agrees with a brute-force oracle") {
  const Corpus c = numbered_corpus(40);
  const auto parts = split_sessions(c, 4, 0.6, 3);
  const auto ids = c.docids();
  Rng rng(5);
  std::vector<QueryExample> examples;
  for (int e = 0; e < 1000; ++e) {
    std::vector<std::string> prov;
    const std::size_t k = 1 + rng.uniform_index(3);
    for (std::size_t idx : rng.sample_distinct(ids.size(), k)) prov.push_back(ids[idx].str());
    if (rng.uniform_index(20) == 0) prov.push_back("not in corpus");
    examples.push_back(example(std::to_string(e), prov));
  }
  std::set<std::string> seen_ids;
  for (int i = 0; i <= 4; ++i) {
    std::set<Docid> upto, before;
    for (int t = 0; t <= i; ++t) upto.insert(parts[t].begin(), parts[t].end());
    for (int t = 0; t < i; ++t) before.insert(parts[t].begin(), parts[t].end());
    std::vector<std::string> expect;
    for (const auto& q : examples) {
      auto inside = [&](const std::set<Docid>& s) {
        return std::all_of(q.provenance.begin(), q.provenance.end(),
                           [&](const Docid& d) { return s.contains(d); });
      };
      if (inside(upto) && (i == 0 || !inside(before))) expect.push_back(q.query_id);
    }
    std::vector<std::string> got;
    for (const auto& q : filter_examples(examples, parts, i)) got.push_back(q.query_id);
    CHECK(got == expect);
    for (const auto& id : got) CHECK(seen_ids.insert(id).second);
  }
}

TEST_CASE("session plan round trip") {
  const Corpus corpus = make_synthetic_corpus({.num_docs = 30});
  const auto queries = make_synthetic_queries(corpus, {});
  const SessionPlan plan = build_session_plan(corpus, queries.train, queries.dev, 2, 0.6, 4);
  CHECK(plan.partitions.size() == 3);
  for (const auto& q : plan.train_pairs_r0) {
    CHECK(find_dataset(q.dataset)->has_train_split);
    CHECK(availability_session(q, plan.partitions) == 0);
  }
  for (const auto& [key, qs] : plan.test_sets) {
    for (const auto& q : qs) CHECK(availability_session(q, plan.partitions) == key.first);
  }
  const auto dir = fixtures::temp_dir("plan");
  save_session_plan(plan, dir);
  const SessionPlan back = load_session_plan(dir);
  CHECK(back.partitions == plan.partitions);
  CHECK(back.train_pairs_r0 == plan.train_pairs_r0);
  CHECK(back.test_sets == plan.test_sets);
  CHECK(back.T == 2);
}

TEST_CASE("query files validate dataset and task") {
  const auto dir = fixtures::temp_dir("queries");
  write_file_atomic(dir / "q.jsonl",
                    "{\"query_id\":\"1\",\"dataset\":\"FEV\",\"task\":\"open_qa\","
                    "\"query\":\"x\",\"provenance\":[\"a\"]}\n");
  CHECK_THROWS_AS(load_queries(dir / "q.jsonl"), ValidationError);
  write_file_atomic(dir / "q.jsonl",
                    "{\"query_id\":\"1\",\"dataset\":\"FEV\",\"task\":\"fact_checking\","
                    "\"query\":\"x\",\"provenance\":[]}\n");
  CHECK_THROWS_AS(load_queries(dir / "q.jsonl"), ValidationError);
  CHECK_THROWS_AS(require_task("summarize"), ValidationError);
  try {
    require_task("summarize");
  } catch (const ValidationError& e) {
    for (TaskId t : kAllTasks) CHECK(std::string(e.what()).find(task_name(t)) != std::string::npos);
  }
}

TEST_CASE("synthetic corpus is seeded and well formed") {
  const Corpus a = make_synthetic_corpus({.num_docs = 64, .seed = 3});
  const Corpus b = make_synthetic_corpus({.num_docs = 64, .seed = 3});
  CHECK(a == b);
  CHECK(a.size() == 64);
  CHECK(!(a == make_synthetic_corpus({.num_docs = 64, .seed = 4})));
  std::size_t anchors = 0;
  for (const auto& d : a.documents()) anchors += d.anchors.size();
  CHECK(anchors > 0);
  const auto q = make_synthetic_queries(a, {});
  for (const auto& ex : q.train) CHECK(find_dataset(ex.dataset)->has_train_split);
  CHECK(!q.dev.empty());
}

}  // TEST_SUITE
