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

#include <filesystem>
#include <set>

#include "docstream/app/config.hpp"
#include "docstream/app/pipeline.hpp"
#include "docstream/common/error.hpp"
#include "docstream/common/io.hpp"
#include "fixtures.hpp"

using namespace docstream;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json tiny_config(const std::string& mode) {
  return json::parse(R"({
    "seed": 5,
    "mode": ")" + mode + R"(",
    "model": {"d_model": 16, "num_heads": 2, "num_layers": 1, "max_positions": 64,
              "adapter": {"rank": 4}},
    "trainer": {
      "pretrain": {"epochs": 1, "max_steps": 3},
      "finetune": {"epochs": 1, "max_steps": 3},
      "continual": {"epochs": 1, "max_steps": 2}
    },
    "rehearsal": {"k_clusters": 2},
    "decode": {"beam_width": 3},
    "paths": {"corpus": "corpus.jsonl", "benchmark": "bench", "out": "run"}
  })");
}

// corpus.jsonl, bench/ and config.json in a fresh directory.
fs::path prepare(const std::string& name, const std::string& mode = "direct") {
  const fs::path dir = fixtures::temp_dir(name);
  save_corpus(make_synthetic_corpus({.num_docs = 16, .seed = 4}), dir / "corpus.jsonl");
  BenchmarkOptions b;
  b.corpus = dir / "corpus.jsonl";
  b.out = dir / "bench";
  b.T = 2;
  b.base_fraction = 0.5;
  build_benchmark(b);
  write_file_atomic(dir / "config.json", tiny_config(mode).dump(2));
  return dir;
}

std::string snapshot(const fs::path& out) {
  std::string all;
  std::set<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.is_regular_file() && e.path().filename() != "timing.csv") files.insert(e.path());
  }
  for (const auto& f : files) all += fs::relative(f, out).string() + "\n" + read_file(f);
  return all;
}

}  // namespace

TEST_SUITE("app") {

TEST_CASE("config parsing") {
  const RunConfig c = parse_run_config(tiny_config("individual"), "/base");
  CHECK(c.seed == 5);
  CHECK(c.mode == TrainMode::individual);
  CHECK(c.model.d_model == 16);
  CHECK(c.adapter.rank == 4);
  CHECK(c.trainer.continual.max_steps == 2);
  CHECK(c.paths.out == fs::path("/base/run"));
  CHECK(parse_run_config(to_json(c)).model == c.model);

  json j = tiny_config("direct");
  j["model"]["d_modle"] = 3;
  CHECK_THROWS_AS(parse_run_config(j), ValidationError);
  j = tiny_config("direct");
  j["surprise"] = true;
  CHECK_THROWS_AS(parse_run_config(j), ValidationError);
  j = tiny_config("direct");
  j["mode"] = "magic";
  CHECK_THROWS_AS(parse_run_config(j), ValidationError);
  j = tiny_config("direct");
  j["model"]["num_heads"] = 3;
  CHECK_THROWS_AS(parse_run_config(j), ValidationError);
  j = tiny_config("direct");
  j["model"]["d_model"] = -16;
  CHECK_THROWS_AS(parse_run_config(j), ValidationError);

  j = tiny_config("direct");
  j["generator"] = json::parse(R"({"iss": {"l": "all", "n": 4}, "pairs_per_doc": 2})");
  const RunConfig g = parse_run_config(j);
  CHECK(g.generator.iss.l == kAllItems);
  CHECK(g.generator.iss.n == 4);
  CHECK(g.generator.lps.pairs_per_doc == 2);
  j["generator"]["iss"]["l"] = "most";
  CHECK_THROWS_AS(parse_run_config(j), ValidationError);

  const RunConfig big = large_scale_preset();
  CHECK(big.rehearsal.k_clusters == 1024);
  CHECK(big.decode.beam_width == 10);
  CHECK(big.decode.max_steps == 15);
  CHECK(big.trainer.max_input_tokens == 384);

  const fs::path dir = fixtures::temp_dir("config");
  write_file_atomic(dir / "c.json", "{not json");
  CHECK_THROWS_AS(load_run_config(dir / "c.json"), ValidationError);
}

TEST_CASE("benchmark directories") {
  const fs::path dir = prepare("bench");
  for (int t = 0; t <= 2; ++t) CHECK(fs::exists(dir / "bench" / "partitions" / ("d" + std::to_string(t) + ".txt")));
  CHECK(fs::exists(dir / "bench" / "r0.jsonl"));
  CHECK(fs::exists(dir / "bench" / "manifest.json"));
  const std::string first = snapshot(dir / "bench");
  BenchmarkOptions b;
  b.corpus = dir / "corpus.jsonl";
  b.out = dir / "bench";
  b.T = 2;
  b.base_fraction = 0.5;
  build_benchmark(b);
  CHECK(snapshot(dir / "bench") == first);
  b.T = 4;
  b.out = dir / "bench4";
  const SessionPlan p4 = build_benchmark(b);
  CHECK(p4.partitions.size() == 5);
  b.base_fraction = 1.0;
  CHECK_THROWS_AS(build_benchmark(b), ValidationError);
  b.base_fraction = 0.5;
  b.train_queries = dir / "missing.jsonl";
  CHECK_THROWS_AS(build_benchmark(b), ValidationError);
}

TEST_CASE("runs are reproducible and resumable") {
  const fs::path dir = prepare("run", "corpusbrainpp");
  const RunConfig cfg = load_run_config(dir / "config.json");
  RunOptions opts;
  opts.config_path = dir / "config.json";
  const RunOutcome full = run_experiment(cfg, opts);
  CHECK(full.complete);
  CHECK(full.last_session == 2);
  for (int t = 0; t <= 2; ++t) {
    for (int i = 0; i <= t; ++i) CHECK(full.matrix.has(t, i));
    CHECK(fs::exists(dir / "run" / "sessions" / ("t" + std::to_string(t)) / "model.ckpt"));
  }
  CHECK(fs::exists(dir / "run" / "report.txt"));
  CHECK(verify_run_manifest(dir / "run").empty());
  CHECK(report_run(dir / "run").find("AP") != std::string::npos);
  const std::string reference = snapshot(dir / "run");

  // Existing output without --resume is refused.
  CHECK_THROWS_AS(run_experiment(cfg, opts), ValidationError);

  // Same inputs, fresh directory: byte-identical artifacts.
  RunConfig again = cfg;
  again.paths.out = dir / "run2";
  run_experiment(again, opts);
  CHECK(snapshot(dir / "run2") == reference);

  // Interrupted after session 0, then resumed.
  RunConfig split = cfg;
  split.paths.out = dir / "run3";
  RunOptions stop = opts;
  stop.stop_after = 0;
  const RunOutcome part = run_experiment(split, stop);
  CHECK(!part.complete);
  CHECK(part.last_session == 0);
  RunOptions resume = opts;
  resume.resume = true;
  const RunOutcome rest = run_experiment(split, resume);
  CHECK(rest.complete);
  CHECK(rest.matrix == full.matrix);
  CHECK(snapshot(dir / "run3") == reference);

  // A changed input is refused on resume.
  RunConfig changed = cfg;
  changed.paths.out = dir / "run4";
  run_experiment(changed, stop);
  changed.trainer.continual.optimizer.lr = 0.5;
  CHECK_THROWS_AS(run_experiment(changed, resume), ValidationError);

  // Tampering is reported.
  write_file_atomic(dir / "run2" / "matrix.csv", "t,i,dataset,value\n");
  CHECK(!verify_run_manifest(dir / "run2").empty());

  SUBCASE("queries against saved sessions") {
    const SessionPlan plan = load_session_plan(dir / "bench");
    const std::set<Docid> d0(plan.partitions[0].begin(), plan.partitions[0].end());
    const fs::path s0 = dir / "run" / "sessions" / "t0";
    const fs::path s2 = dir / "run" / "sessions" / "t2";
    for (const auto& [key, qs] : plan.test_sets) {
      for (const auto& q : qs) {
        for (const auto& hit : query_session(s0, q.task, q.query_text)) {
          for (const auto& d : hit.docids) CHECK(d0.contains(d));
        }
      }
    }
    const auto hits = query_session(s2, TaskId::entity_linking,
                                     "the [START_ENT] " + plan.partitions[2].front().str() + " [END_ENT] of");
    CHECK(!hits.empty());
    CHECK(format_hits(hits).starts_with("1\t"));
    const LoadedSession loaded = load_session(s2);
    CHECK(loaded.state.t == 2);
    CHECK(loaded.model.d_model == 16);
    CHECK(loaded.state.trie.size() == plan.partitions[0].size() + plan.partitions[1].size() +
                                          plan.partitions[2].size());
    CHECK_THROWS_AS(load_session(dir / "nowhere"), ValidationError);
  }
}

}  // TEST_SUITE
