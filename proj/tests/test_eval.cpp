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
#include <cmath>

#include "docstream/common/error.hpp"
#include "docstream/common/rng.hpp"
#include "docstream/decoder/trie.hpp"
#include "docstream/eval/evaluate.hpp"
#include "docstream/eval/metrics.hpp"

using namespace docstream;

namespace {

std::vector<Docid> ids(std::initializer_list<const char*> names) {
  std::vector<Docid> out;
  for (const char* n : names) out.emplace_back(n);
  return out;
}

// Rows t, columns i, one dataset.
PerformanceMatrix from_rows(const std::vector<std::vector<double>>& rows,
                            const std::string& dataset = "NQ") {
  PerformanceMatrix m;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t i = 0; i < rows[t].size(); ++i) {
      m.set(static_cast<int>(t), static_cast<int>(i), dataset, rows[t][i]);
    }
  }
  return m;
}

// Straight transcription of the three definitions over a dense table.
SummaryMetrics transcribe(const std::vector<std::vector<double>>& p) {
  const int T = static_cast<int>(p.size()) - 1;
  SummaryMetrics s;
  for (int i = 0; i <= T; ++i) s.ap += p[T][i] / (T + 1);
  for (int i = 0; i < T; ++i) {
    double best = -1e300;
    for (int t = i; t <= T - 1; ++t) best = std::max(best, p[t][i] - p[T][i]);
    s.bwt += best / T;
  }
  for (int t = 1; t <= T; ++t) s.fwt += p[t][t] / T;
  return s;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("r_precision") {
  CHECK(r_precision(ids({"a", "b"}), ids({"a", "c", "b"})) == 0.5);
  CHECK(r_precision(ids({"a", "b"}), ids({"b", "a"})) == 1.0);
  CHECK(r_precision(ids({"a"}), {}) == 0.0);
  CHECK(r_precision(ids({"a", "b", "c"}), ids({"c"})) == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(r_precision({}, ids({"a"})), ValidationError);
}

TEST_CASE("hand matrix") {
  const auto m = from_rows({{0.6}, {0.5, 0.4}, {0.3, 0.2, 0.35}});
  const auto s = summary_metrics(m, 2);
  CHECK(s.ap == doctest::Approx((0.3 + 0.2 + 0.35) / 3).epsilon(1e-12));
  CHECK(s.ap == doctest::Approx(0.28333333333333).epsilon(1e-10));
  CHECK(s.bwt == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.fwt == doctest::Approx(0.375).epsilon(1e-12));
}

TEST_CASE("random matrices agree with a direct transcription") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = 1 + static_cast<int>(rng.uniform_index(5));
    std::vector<std::vector<double>> p(T + 1);
    PerformanceMatrix m;
    for (int t = 0; t <= T; ++t) {
      for (int i = 0; i <= t; ++i) {
        // Two datasets per cell; p holds their mean.
        const double a = rng.uniform(), b = rng.uniform();
        m.set(t, i, "FEV", a);
        m.set(t, i, "NQ", b);
        p[t].push_back((a + b) / 2);
      }
    }
    const auto got = summary_metrics(m, T);
    const auto want = transcribe(p);
    CHECK(std::abs(got.ap - want.ap) <= 1e-12);
    CHECK(std::abs(got.bwt - want.bwt) <= 1e-12);
    CHECK(std::abs(got.fwt - want.fwt) <= 1e-12);
    CHECK(got.ap >= 0.0);
    CHECK(got.ap <= 1.0);
    CHECK(got.bwt >= -1.0);
    CHECK(got.bwt <= 1.0);
    CHECK(got.fwt >= 0.0);
    CHECK(got.fwt <= 1.0);
  }
}

TEST_CASE("constant and non-degrading matrices") {
  const auto c = summary_metrics(from_rows({{0.7}, {0.7, 0.7}, {0.7, 0.7, 0.7}}), 2);
  CHECK(c.ap == doctest::Approx(0.7));
  CHECK(c.bwt == doctest::Approx(0.0));
  CHECK(c.fwt == doctest::Approx(0.7));
  const auto up = summary_metrics(from_rows({{0.2}, {0.3, 0.1}, {0.5, 0.4, 0.6}}), 2);
  CHECK(up.bwt <= 0.0);
}

TEST_CASE("dataset order and duplicated datasets do not matter") {
  PerformanceMatrix a, b, c;
  Rng rng(3);
  std::vector<std::tuple<int, int, double, double, double>> cells;
  for (int t = 0; t <= 2; ++t) {
    for (int i = 0; i <= t; ++i) cells.emplace_back(t, i, rng.uniform(), rng.uniform(), rng.uniform());
  }
  for (const auto& [t, i, x, y, z] : cells) {
    a.set(t, i, "FEV", x);
    a.set(t, i, "NQ", y);
    b.set(t, i, "FEV", y);
    b.set(t, i, "NQ", x);
    c.set(t, i, "FEV", x);
    c.set(t, i, "NQ", x);
    c.set(t, i, "WoW", x);
  }
  const auto sa = summary_metrics(a, 2), sb = summary_metrics(b, 2);
  CHECK(sa.ap == doctest::Approx(sb.ap).epsilon(1e-14));
  CHECK(sa.bwt == doctest::Approx(sb.bwt).epsilon(1e-14));
  CHECK(sa.fwt == doctest::Approx(sb.fwt).epsilon(1e-14));
  for (const auto& [t, i, x, y, z] : cells) CHECK(c.averaged(t, i) == doctest::Approx(x).epsilon(1e-14));
}

TEST_CASE("vertical performance scopes") {
  PerformanceMatrix single;
  single.set(0, 0, "NQ", 0.42);
  CHECK(vp(single, 0, VpScope::dataset("NQ")) == 0.42);
  CHECK(vp(single, 0, VpScope::task("open_qa")) == 0.42);
  CHECK(vp(single, 0, VpScope::all()) == 0.42);

  PerformanceMatrix two;
  two.set(1, 1, "NQ", 0.4);
  two.set(1, 1, "TQA", 0.6);
  CHECK(vp(two, 1, VpScope::task("open_qa")) == doctest::Approx(0.5));
  CHECK_THROWS_AS(vp(two, 1, VpScope::task("dialogue")), Error);
  CHECK_THROWS_AS(vp(two, 0, VpScope::all()), Error);
  CHECK_THROWS_AS(vp(two, 1, VpScope::dataset("FEV")), Error);

  PerformanceMatrix all;
  double total = 0;
  std::map<TaskId, std::pair<double, int>> per_task;
  for (std::size_t k = 0; k < kDatasets.size(); ++k) {
    const double v = 0.05 * static_cast<double>(k + 1);
    all.set(3, 3, std::string(kDatasets[k].name), v);
    total += v;
    per_task[kDatasets[k].task].first += v;
    ++per_task[kDatasets[k].task].second;
  }
  CHECK(vp(all, 3, VpScope::all()) == doctest::Approx(total / 11).epsilon(1e-14));
  // Entity linking: AY2 0.10, WnWi 0.15, WnCw 0.20.
  CHECK(vp(all, 3, VpScope::task("entity_linking")) == doctest::Approx(0.15).epsilon(1e-14));
  // Open QA: NQ 0.35, HoPo 0.40, TQA 0.45, ELI5 0.50.
  CHECK(vp(all, 3, VpScope::task("open_qa")) == doctest::Approx(0.425).epsilon(1e-14));
  for (const auto& [task, acc] : per_task) {
    CHECK(vp(all, 3, VpScope::task(std::string(task_name(task)))) ==
          doctest::Approx(acc.first / acc.second).epsilon(1e-14));
  }
}

TEST_CASE("matrix cells and persistence") {
  PerformanceMatrix m;
  CHECK_THROWS_AS(m.set(0, 1, "NQ", 0.5), Error);
  CHECK_THROWS_AS(m.set(1, 0, "NQ", 1.5), Error);
  CHECK(m.last_session() == -1);
  m.set(0, 0, "NQ", 0.1);
  m.set(1, 0, "NQ", 1.0 / 3);
  m.set(1, 1, "FEV", 0.7);
  CHECK(!m.get(1, 1, "NQ"));
  CHECK(m.last_session() == 1);
  CHECK(m.to_csv().starts_with("t,i,dataset,value\n"));
  CHECK(PerformanceMatrix::from_csv(m.to_csv()) == m);
  CHECK_THROWS_AS(PerformanceMatrix::from_csv("t,i,dataset,value\n0,1,NQ,0.5\n"), ParseError);
  CHECK_NOTHROW(summary_metrics(m, 1));
  m.set(1, 0, "FEV", 0.2);
  CHECK_THROWS_AS(summary_metrics(m, 1), Error);
  CHECK_THROWS_AS(summary_metrics(from_rows({{0.5}, {0.5}}), 1), Error);
  CHECK_THROWS_AS(summary_metrics(from_rows({{0.5}}), 0), Error);
  const std::string report = text_report(from_rows({{0.6}, {0.5, 0.4}}), 1);
  CHECK(report.find("BWT") != std::string::npos);
}

TEST_CASE("matrix_entry averages R-precision over queries") {
  ModelConfig mc;
  mc.d_model = 8;
  mc.num_heads = 2;
  mc.num_layers = 1;
  mc.max_positions = 16;
  Vocabulary vocab;
  vocab.add_text("Alpha Beta question one two");
  vocab.finalize();
  mc.vocab_size = vocab.size();
  ParameterStore store;
  Rng rng(1);
  init_backbone(store, mc, rng);
  // A single-member trie makes every decode land on "Alpha".
  DocidTrie trie;
  trie.insert(Docid("Alpha"), vocab);
  RetrievalModel rm;
  rm.shared = &store;
  rm.model = mc;
  rm.vocab = &vocab;
  rm.trie = &trie;
  rm.beam.beam_width = 2;
  auto q = [](const char* id, const char* gold) {
    QueryExample e;
    e.query_id = id;
    e.dataset = "NQ";
    e.task = TaskId::open_qa;
    e.query_text = "question one";
    e.provenance = {Docid(gold)};
    return e;
  };
  CHECK(matrix_entry(rm, {}) == std::nullopt);
  CHECK(*matrix_entry(rm, {q("1", "Alpha"), q("2", "Alpha")}) == 1.0);
  CHECK(*matrix_entry(rm, {q("1", "Alpha"), q("2", "Beta")}) == 0.5);
  CHECK(*matrix_entry(rm, {q("1", "Alpha"), q("2", "Beta")}) == *matrix_entry(rm, {q("1", "Alpha"), q("2", "Beta")}));
}

}  // TEST_SUITE
